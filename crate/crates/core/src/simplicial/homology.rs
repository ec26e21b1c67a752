use num_traits::Zero;

use super::{Chain, SimplicialComplex};
use crate::linalg::{eliminate, primitive_integer, QMatrix, Q};

/// Matrix of `∂_k : C_k → C_{k−1}` in the simplex orderings of the complex
/// (rows: `(k−1)`-simplices, columns: `k`-simplices).
pub fn boundary_matrix(k: &SimplicialComplex, deg: usize) -> QMatrix {
    if deg == 0 {
        return vec![];
    }
    let rows = k.index_map(deg - 1);
    let cols = k.simplices(deg);
    let mut m = vec![vec![Q::zero(); cols.len()]; rows.len()];
    for (c, s) in cols.iter().enumerate() {
        for (face, a) in Chain::simplex(s).boundary().terms() {
            m[rows[face]][c] = a.clone();
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct Homology {
    pub degree: usize,
    pub betti: usize,
    /// Cycles whose classes form a basis of `H_k(K; ℚ)`, scaled to primitive
    /// integer coefficients.
    pub cycles: Vec<Chain>,
}

/// Rational homology in degree `deg` with representative cycles.
pub fn homology(k: &SimplicialComplex, deg: usize) -> Homology {
    let n_k = k.count(deg);
    if n_k == 0 {
        return Homology {
            degree: deg,
            betti: 0,
            cycles: vec![],
        };
    }
    // kernel of ∂_k
    let kernel: Vec<Vec<Q>> = if deg == 0 {
        (0..n_k)
            .map(|i| {
                let mut v = vec![Q::zero(); n_k];
                v[i] = num_traits::One::one();
                v
            })
            .collect()
    } else {
        let d = boundary_matrix(k, deg);
        eliminate(&d, n_k).kernel()
    };
    // image of ∂_{k+1} as column vectors in C_k
    let up = boundary_matrix(k, deg + 1);
    let n_up = k.count(deg + 1);
    let mut span: Vec<Vec<Q>> = (0..n_up).map(|c| up.iter().map(|row| row[c].clone()).collect()).collect();
    let mut rank = crate::linalg::rank(&span, n_k);
    let mut cycles = Vec::new();
    for z in kernel {
        span.push(z.clone());
        let r = crate::linalg::rank(&span, n_k);
        if r > rank {
            rank = r;
            let z = primitive_integer(&z);
            cycles.push(Chain::from_terms(
                k.simplices(deg).iter().cloned().zip(z).filter(|(_, a)| !a.is_zero()),
            ));
        } else {
            span.pop();
        }
    }
    Homology {
        degree: deg,
        betti: cycles.len(),
        cycles,
    }
}

/// Betti numbers in degrees `0..=dim`.
pub fn betti_numbers(k: &SimplicialComplex) -> Vec<usize> {
    (0..=k.dim()).map(|d| homology(k, d).betti).collect()
}

impl SimplicialComplex {
    pub fn betti_numbers(&self) -> Vec<usize> {
        betti_numbers(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::q;

    fn abstract_k(n: usize, s: Vec<Vec<usize>>) -> SimplicialComplex {
        SimplicialComplex::abstract_complex(n, s).unwrap()
    }

    #[test]
    fn point_and_circle() {
        let p = abstract_k(1, vec![]);
        assert_eq!(p.betti_numbers(), vec![1]);
        let c = abstract_k(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]);
        assert_eq!(c.betti_numbers(), vec![1, 1]);
        let h = homology(&c, 1);
        assert!(h.cycles[0].is_cycle());
        assert_eq!(h.cycles[0].coefficient(&[0, 1]), q(1));
    }

    #[test]
    fn tetrahedron_boundary() {
        let t = abstract_k(4, vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]]);
        assert_eq!(t.betti_numbers(), vec![1, 0, 1]);
    }

    #[test]
    fn disconnected_points() {
        let k = abstract_k(3, vec![vec![0, 1]]);
        assert_eq!(k.betti_numbers(), vec![2, 0]);
    }
}
