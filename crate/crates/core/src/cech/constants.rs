use std::collections::BTreeMap;

use num_traits::Zero;

use crate::forms::poly::q_to_f64;
use crate::linalg::{dot, eliminate, primitive_integer, Elimination, Q};
use crate::simplicial::{Chain, SimplicialComplex};

/// Exact solver for `δc = g`, with `g` a Cech `l`-cochain of constants and
/// `c` an `(l−1)`-cochain, on a fixed nerve.
///
/// The solution operator `g ↦ c` is a rational matrix that depends only on
/// the nerve; it is available through [`solution_matrix`](Self::solution_matrix).
/// Columns are eliminated in reverse vertex order so that the free variables,
/// which are set to zero, sit on the smallest tuples (for `l = 1`: `c = 0` on
/// the smallest vertex of each nerve component).
#[derive(Clone, Debug)]
pub struct ConstantSolver {
    l: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    elim: Elimination,
    /// Nerve `l`-cycles spanning the obstruction space, primitive integer
    /// coefficients.
    cycles: Vec<Vec<Q>>,
}

/// `δc = g` has no solution: `cycle` is a nerve cycle with `⟨g, cycle⟩ = period ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Infeasible {
    pub cycle: Chain,
    pub period: f64,
    pub exact_period: Option<Q>,
}

impl ConstantSolver {
    pub fn new(nerve: &SimplicialComplex, l: usize) -> Self {
        assert!(l >= 1, "δ starts at Cech degree 0");
        let rows = nerve.simplices(l).to_vec();
        let mut cols = nerve.simplices(l - 1).to_vec();
        cols.reverse();
        let col_pos: BTreeMap<&Vec<usize>, usize> = cols.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut m = vec![vec![Q::zero(); cols.len()]; rows.len()];
        for (r, tuple) in rows.iter().enumerate() {
            for j in 0..tuple.len() {
                let mut face = tuple.clone();
                face.remove(j);
                m[r][col_pos[&face]] = if j % 2 == 0 { Q::from_integer(1.into()) } else { Q::from_integer((-1).into()) };
            }
        }
        let elim = eliminate(&m, cols.len());
        let cycles = elim.left_null_space().iter().map(|y| primitive_integer(y)).collect();
        ConstantSolver { l, rows, cols, elim, cycles }
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    /// Nerve `l`-simplices indexing `g`.
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Nerve `(l−1)`-simplices indexing `c` (in solver order).
    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    /// Basis of nerve `l`-cycles `z` (as chains) such that `δc = g` is
    /// solvable iff `⟨g, z⟩ = 0` for all of them.
    pub fn obstruction_cycles(&self) -> Vec<Chain> {
        self.cycles.iter().map(|y| self.chain(y)).collect()
    }

    fn chain(&self, y: &[Q]) -> Chain {
        Chain::from_terms(self.rows.iter().cloned().zip(y.iter().cloned()).filter(|(_, a)| !a.is_zero()))
    }

    /// The matrix `A` with `c_J = Σ_I A[J][I] g_I` for every solvable `g`,
    /// as `(col tuple, row tuple) → entry` with zero entries omitted.
    pub fn solution_matrix(&self) -> BTreeMap<(Vec<usize>, Vec<usize>), Q> {
        let mut out = BTreeMap::new();
        for (r, &c) in self.elim.pivots.iter().enumerate() {
            for (i, a) in self.elim.transform[r].iter().enumerate() {
                if !a.is_zero() {
                    out.insert((self.cols[c].clone(), self.rows[i].clone()), a.clone());
                }
            }
        }
        out
    }

    fn vector_exact(&self, g: &BTreeMap<Vec<usize>, Q>) -> Vec<Q> {
        self.rows.iter().map(|r| g.get(r).cloned().unwrap_or_else(Q::zero)).collect()
    }

    /// Exact solve.
    pub fn solve_exact(&self, g: &BTreeMap<Vec<usize>, Q>) -> Result<BTreeMap<Vec<usize>, Q>, Infeasible> {
        let b = self.vector_exact(g);
        for y in &self.cycles {
            let p = dot(y, &b);
            if !p.is_zero() {
                return Err(Infeasible {
                    cycle: self.chain(y),
                    period: q_to_f64(&p),
                    exact_period: Some(p),
                });
            }
        }
        let x = self.elim.solve(&b).expect("all periods vanish");
        Ok(self.cols.iter().cloned().zip(x).filter(|(_, v)| !v.is_zero()).collect())
    }

    /// Floating-point solve: periods below `tol` in absolute value count as
    /// zero.
    pub fn solve_f64(&self, g: &BTreeMap<Vec<usize>, f64>, tol: f64) -> Result<BTreeMap<Vec<usize>, f64>, Infeasible> {
        let b: Vec<f64> = self.rows.iter().map(|r| g.get(r).copied().unwrap_or(0.0)).collect();
        for y in &self.cycles {
            let p: f64 = y.iter().zip(&b).map(|(a, v)| q_to_f64(a) * v).sum();
            if p.abs() > tol {
                return Err(Infeasible {
                    cycle: self.chain(y),
                    period: p,
                    exact_period: None,
                });
            }
        }
        let mut x = BTreeMap::new();
        for (r, &c) in self.elim.pivots.iter().enumerate() {
            let v: f64 = self.elim.transform[r].iter().zip(&b).map(|(a, bi)| q_to_f64(a) * bi).sum();
            x.insert(self.cols[c].clone(), v);
        }
        Ok(x)
    }
}

/// One-shot exact solve of `δc = g` for a cochain of constants of Cech
/// degree `l ≥ 1`.
pub fn solve_constants(
    nerve: &SimplicialComplex,
    l: usize,
    g: &BTreeMap<Vec<usize>, Q>,
) -> Result<BTreeMap<Vec<usize>, Q>, Infeasible> {
    ConstantSolver::new(nerve, l).solve_exact(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::q;
    use crate::simplicial::SimplicialComplex;

    #[test]
    fn two_pieces() {
        let nerve = SimplicialComplex::abstract_complex(2, vec![vec![0, 1]]).unwrap();
        let g = BTreeMap::from([(vec![0, 1], q(5))]);
        let c = solve_constants(&nerve, 1, &g).unwrap();
        assert_eq!(c.get(&vec![0]), None);
        assert_eq!(c[&vec![1]], q(5));
        assert!(solve_constants(&nerve, 1, &BTreeMap::new()).unwrap().is_empty());
    }

    #[test]
    fn circle_period_certificate() {
        let nerve = SimplicialComplex::abstract_complex(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        // g_{20} = 1 means g_{02} = −1
        let g = BTreeMap::from([(vec![0, 1], q(1)), (vec![1, 2], q(1)), (vec![0, 2], q(-1))]);
        let err = solve_constants(&nerve, 1, &g).unwrap_err();
        assert_eq!(err.exact_period, Some(q(3)));
        let want = Chain::from_terms(vec![(vec![0, 1], q(1)), (vec![1, 2], q(1)), (vec![2, 0], q(1))]);
        assert_eq!(err.cycle, want);
    }

    #[test]
    fn solution_matrix_reproduces_solution() {
        let nerve = SimplicialComplex::abstract_complex(3, vec![vec![0, 1, 2]]).unwrap();
        let solver = ConstantSolver::new(&nerve, 1);
        // g = δ(1, 4, 9)
        let g = BTreeMap::from([(vec![0, 1], q(3)), (vec![1, 2], q(5)), (vec![0, 2], q(8))]);
        let c = solver.solve_exact(&g).unwrap();
        let a = solver.solution_matrix();
        for (col, val) in &c {
            let mut s = q(0);
            for ((cj, ri), e) in &a {
                if cj == col {
                    s += e * &g[ri];
                }
            }
            assert_eq!(&s, val);
        }
        assert_eq!(c[&vec![1]], q(3));
        assert_eq!(c[&vec![2]], q(8));
    }
}
