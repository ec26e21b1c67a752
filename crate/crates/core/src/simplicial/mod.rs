//! Oriented simplicial complexes, chains, covers by open stars, nerves and
//! rational homology.

mod chain;
mod cover;
mod homology;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub use chain::Chain;
pub use cover::{star_cover, Cover, CoverPiece, Nerve};
pub use homology::{betti_numbers, boundary_matrix, homology, Homology};

use crate::forms::Polynomial;
use crate::linalg::{eliminate, Q};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimplicialError {
    #[error("complex has no vertices")]
    Empty,
    #[error("vertex {index} does not exist (complex has {count} vertices)")]
    BadVertex { index: usize, count: usize },
    #[error("simplex {0:?} repeats a vertex")]
    RepeatedVertex(Vec<usize>),
    #[error("vertex coordinates have inconsistent dimensions")]
    RaggedCoordinates,
    #[error("simplex {0:?} is degenerate in its geometric realization")]
    Degenerate(Vec<usize>),
    #[error("cover is invalid: {0}")]
    BadCover(String),
    #[error("chain is not a cycle")]
    NotACycle,
    #[error("malformed coordinate: {0}")]
    BadCoordinate(String),
}

/// A finite simplicial complex with a linear realization in ℝᵈ.
///
/// Simplices are stored as sorted vertex tuples; the set is closed under
/// taking faces (faces are added on construction).
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialComplex {
    vertices: Vec<Vec<Q>>,
    by_dim: Vec<Vec<Vec<usize>>>,
    all: BTreeSet<Vec<usize>>,
}

impl SimplicialComplex {
    /// Builds the face closure of `simplices`. Vertex order within an input
    /// simplex is irrelevant.
    pub fn new(vertices: Vec<Vec<Q>>, simplices: Vec<Vec<usize>>) -> Result<Self, SimplicialError> {
        if vertices.is_empty() {
            return Err(SimplicialError::Empty);
        }
        let d = vertices[0].len();
        if vertices.iter().any(|v| v.len() != d) {
            return Err(SimplicialError::RaggedCoordinates);
        }
        let count = vertices.len();
        let mut all = BTreeSet::new();
        for v in 0..count {
            all.insert(vec![v]);
        }
        for s in simplices {
            let mut s = s.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(SimplicialError::RepeatedVertex(s));
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= count) {
                return Err(SimplicialError::BadVertex { index: bad, count });
            }
            for face in nonempty_subsets(&s) {
                all.insert(face);
            }
        }
        let max_dim = all.iter().map(|s| s.len()).max().unwrap_or(1) - 1;
        let mut by_dim = vec![Vec::new(); max_dim + 1];
        for s in &all {
            by_dim[s.len() - 1].push(s.clone());
        }
        let k = SimplicialComplex { vertices, by_dim, all };
        for facet in k.facets() {
            if facet.len() > 1 && k.edge_gram(&facet).is_none() {
                return Err(SimplicialError::Degenerate(facet));
            }
        }
        Ok(k)
    }

    /// Complex whose vertices are not embedded anywhere in particular
    /// (used for nerves): vertex `i` sits at the `i`-th standard basis vector.
    pub fn abstract_complex(n_vertices: usize, simplices: Vec<Vec<usize>>) -> Result<Self, SimplicialError> {
        let vertices = (0..n_vertices)
            .map(|i| {
                let mut v = vec![Q::zero(); n_vertices];
                v[i] = Q::one();
                v
            })
            .collect();
        Self::new(vertices, simplices)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertex(&self, i: usize) -> &[Q] {
        &self.vertices[i]
    }

    pub fn vertex_f64(&self, i: usize) -> Vec<f64> {
        self.vertices[i].iter().map(crate::forms::poly::q_to_f64).collect()
    }

    pub fn dim(&self) -> usize {
        self.by_dim.len() - 1
    }

    /// Sorted list of `k`-simplices (empty above the top dimension).
    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        self.by_dim.get(k).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices(k).len()
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        let mut v = s.to_vec();
        v.sort_unstable();
        self.all.contains(&v)
    }

    pub fn all_simplices(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.all.iter()
    }

    /// Maximal simplices.
    pub fn facets(&self) -> Vec<Vec<usize>> {
        let mut cofaced = BTreeSet::new();
        for s in &self.all {
            for i in 0..s.len() {
                if s.len() > 1 {
                    let mut f = s.clone();
                    f.remove(i);
                    cofaced.insert(f);
                }
            }
        }
        self.all.iter().filter(|s| !cofaced.contains(*s)).cloned().collect()
    }

    /// Index of each `k`-simplex in [`simplices`](Self::simplices)`(k)`.
    pub fn index_map(&self, k: usize) -> BTreeMap<Vec<usize>, usize> {
        self.simplices(k).iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()
    }

    pub fn barycenter(&self, s: &[usize]) -> Vec<Q> {
        let d = self.ambient_dim();
        let mut c = vec![Q::zero(); d];
        for &v in s {
            for (ci, xi) in c.iter_mut().zip(&self.vertices[v]) {
                *ci += xi;
            }
        }
        let m = Q::from_integer((s.len() as i64).into());
        c.into_iter().map(|x| x / &m).collect()
    }

    // Gram matrix of the edge vectors v_j − v_0 of a simplex, None if singular
    fn edge_gram(&self, s: &[usize]) -> Option<Vec<Vec<Q>>> {
        let v0 = &self.vertices[s[0]];
        let edges: Vec<Vec<Q>> = s[1..]
            .iter()
            .map(|&j| self.vertices[j].iter().zip(v0).map(|(a, b)| a - b).collect())
            .collect();
        let g: Vec<Vec<Q>> = edges
            .iter()
            .map(|a| edges.iter().map(|b| crate::linalg::dot(a, b)).collect())
            .collect();
        (eliminate(&g, g.len()).rank() == g.len()).then_some(g)
    }

    /// Affine functions on ℝᵈ restricting to the barycentric coordinates of
    /// the simplex `s` (one per vertex of `s`, in order). When `s` has lower
    /// dimension than the ambient space, the gradients are taken inside the
    /// affine span of `s`.
    pub fn barycentric_functions(&self, s: &[usize]) -> Result<Vec<Polynomial>, SimplicialError> {
        let d = self.ambient_dim();
        let m = s.len();
        if m == 1 {
            return Ok(vec![Polynomial::one(d)]);
        }
        let g = self.edge_gram(s).ok_or_else(|| SimplicialError::Degenerate(s.to_vec()))?;
        let v0 = self.vertices[s[0]].clone();
        let edges: Vec<Vec<Q>> = s[1..]
            .iter()
            .map(|&j| self.vertices[j].iter().zip(&v0).map(|(a, b)| a - b).collect())
            .collect();
        let el = eliminate(&g, m - 1);
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            // a_i · e_j = δ_ij − δ_i0 for j = 1..m−1
            let rhs: Vec<Q> = (1..m)
                .map(|j| {
                    let mut v = Q::zero();
                    if i == j {
                        v += Q::one();
                    }
                    if i == 0 {
                        v -= Q::one();
                    }
                    v
                })
                .collect();
            let beta = el.solve(&rhs).expect("Gram matrix is invertible");
            let mut grad = vec![Q::zero(); d];
            for (b, e) in beta.iter().zip(&edges) {
                for (gk, ek) in grad.iter_mut().zip(e) {
                    *gk += b * ek;
                }
            }
            // λ_i(x) = a_i·(x − v_0) + δ_i0
            let mut p = Polynomial::constant(d, if i == 0 { Q::one() } else { Q::zero() });
            for (k, gk) in grad.iter().enumerate() {
                let xk = Polynomial::var(d, k).sub(&Polynomial::constant(d, v0[k].clone()));
                p = p.add(&xk.scale(gk));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Euler characteristic.
    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim())
            .map(|k| if k % 2 == 0 { self.count(k) as i64 } else { -(self.count(k) as i64) })
            .sum()
    }
}

/// All nonempty subsets of a sorted tuple, each sorted.
pub fn nonempty_subsets(s: &[usize]) -> Vec<Vec<usize>> {
    let n = s.len();
    assert!(n < 31, "simplex too large to enumerate faces");
    (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| s[i]).collect())
        .collect()
}

// ---- JSON ----

/// A coordinate given as a JSON number or as a rational string like `"1/3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Number(f64),
    Text(String),
}

impl Coord {
    pub fn to_q(&self) -> Result<Q, SimplicialError> {
        match self {
            Coord::Number(x) => rational_from_f64(*x).ok_or_else(|| SimplicialError::BadCoordinate(x.to_string())),
            Coord::Text(s) => parse_rational(s).ok_or_else(|| SimplicialError::BadCoordinate(s.clone())),
        }
    }
}

pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let num = a.trim().parse::<num_bigint::BigInt>().ok()?;
        let den = b.trim().parse::<num_bigint::BigInt>().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Q::new(num, den));
    }
    if let Ok(i) = s.parse::<num_bigint::BigInt>() {
        return Some(Q::from_integer(i));
    }
    s.parse::<f64>().ok().and_then(rational_from_f64)
}

/// Shortest rational within `1e−15·max(1, |x|)` of `x` found by continued
/// fractions (denominator at most 10⁹), else the exact binary value.
pub fn rational_from_f64(x: f64) -> Option<Q> {
    if !x.is_finite() {
        return None;
    }
    let tol = 1e-15 * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > 1_000_000_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= tol {
            return Some(Q::new(h1.into(), k1.into()));
        }
        let frac = r - a;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    Q::from_float(x)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexJson {
    pub vertices: Vec<Vec<Coord>>,
    pub simplices: Vec<Vec<usize>>,
}

impl ComplexJson {
    pub fn build(&self) -> Result<SimplicialComplex, SimplicialError> {
        let verts = self
            .vertices
            .iter()
            .map(|v| v.iter().map(Coord::to_q).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        SimplicialComplex::new(verts, self.simplices.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{q, q_frac};

    fn triangle() -> SimplicialComplex {
        SimplicialComplex::new(
            vec![vec![q(0), q(0)], vec![q(1), q(0)], vec![q(0), q(1)]],
            vec![vec![2, 0, 1]],
        )
        .unwrap()
    }

    #[test]
    fn face_closure() {
        let k = triangle();
        assert_eq!(k.count(0), 3);
        assert_eq!(k.count(1), 3);
        assert_eq!(k.count(2), 1);
        assert_eq!(k.facets(), vec![vec![0, 1, 2]]);
        assert_eq!(k.euler_characteristic(), 1);
    }

    #[test]
    fn barycentric_coordinates_are_exact() {
        let k = triangle();
        let f = k.barycentric_functions(&[0, 1, 2]).unwrap();
        for (i, fi) in f.iter().enumerate() {
            for j in 0..3 {
                let want = if i == j { q(1) } else { q(0) };
                assert_eq!(fi.eval_exact(k.vertex(j)), want);
            }
        }
        let sum = f.iter().fold(Polynomial::zero(2), |a, b| a.add(b));
        assert_eq!(sum, Polynomial::one(2));
    }

    #[test]
    fn barycentric_on_embedded_edge() {
        let k = SimplicialComplex::new(vec![vec![q(0), q(0), q(0)], vec![q(1), q(1), q(0)]], vec![vec![0, 1]]).unwrap();
        let f = k.barycentric_functions(&[0, 1]).unwrap();
        assert_eq!(f[1].eval_exact(&[q_frac(1, 2), q_frac(1, 2), q(0)]), q_frac(1, 2));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SimplicialComplex::new(vec![vec![q(0)]], vec![vec![0, 3]]).is_err());
        assert!(SimplicialComplex::new(vec![vec![q(0)], vec![q(0)]], vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn coordinate_parsing() {
        assert_eq!(parse_rational("-3/6"), Some(q_frac(-1, 2)));
        assert_eq!(rational_from_f64(0.1), Some(q_frac(1, 10)));
        assert_eq!(rational_from_f64(2.0), Some(q(2)));
    }
}
