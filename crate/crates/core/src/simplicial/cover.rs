use std::collections::BTreeSet;
use std::ops::Deref;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;

use super::{nonempty_subsets, SimplicialComplex, SimplicialError};
use crate::linalg::Q;

/// A cover piece: the union of the open stars of `vertices`, with a point
/// from which the piece is declared star-shaped.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverPiece {
    pub vertices: BTreeSet<usize>,
    pub base: Vec<Q>,
}

/// An open cover of a complex's realization by unions of open vertex stars.
///
/// The open simplex `int σ` lies in the piece with vertex set `A` iff `σ`
/// has a vertex in `A`, so `U_I` is the union of the open simplices that
/// meet every `A_j`, `j ∈ I`.
#[derive(Clone, Debug)]
pub struct Cover {
    complex: Arc<SimplicialComplex>,
    pieces: Vec<CoverPiece>,
}

impl Cover {
    pub fn new(complex: Arc<SimplicialComplex>, pieces: Vec<CoverPiece>) -> Result<Self, SimplicialError> {
        if pieces.is_empty() {
            return Err(SimplicialError::BadCover("no pieces".into()));
        }
        let d = complex.ambient_dim();
        let mut covered = BTreeSet::new();
        for (j, p) in pieces.iter().enumerate() {
            if p.vertices.is_empty() {
                return Err(SimplicialError::BadCover(format!("piece {j} is empty")));
            }
            if let Some(&v) = p.vertices.iter().find(|&&v| v >= complex.n_vertices()) {
                return Err(SimplicialError::BadVertex {
                    index: v,
                    count: complex.n_vertices(),
                });
            }
            if p.base.len() != d {
                return Err(SimplicialError::BadCover(format!("base point of piece {j} has wrong dimension")));
            }
            covered.extend(p.vertices.iter().copied());
        }
        // every open simplex has a vertex, so covering all vertices suffices
        if covered.len() != complex.n_vertices() {
            let missing = (0..complex.n_vertices()).find(|v| !covered.contains(v)).unwrap();
            return Err(SimplicialError::BadCover(format!("vertex {missing} is not covered")));
        }
        Ok(Cover { complex, pieces })
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn complex_arc(&self) -> Arc<SimplicialComplex> {
        self.complex.clone()
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[CoverPiece] {
        &self.pieces
    }

    /// Pieces whose vertex set meets `σ`.
    pub fn touched_by(&self, sigma: &[usize]) -> Vec<usize> {
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| sigma.iter().any(|v| p.vertices.contains(v)))
            .map(|(j, _)| j)
            .collect()
    }

    /// Whether `int σ ⊂ U_I`.
    pub fn simplex_in(&self, sigma: &[usize], index: &[usize]) -> bool {
        index
            .iter()
            .all(|&j| sigma.iter().any(|v| self.pieces[j].vertices.contains(v)))
    }

    pub fn intersects(&self, index: &[usize]) -> bool {
        self.complex.facets().iter().any(|f| self.simplex_in(f, index))
    }

    /// Facets of the complex whose interiors lie in `U_I`.
    pub fn facets_in(&self, index: &[usize]) -> Vec<Vec<usize>> {
        self.complex
            .facets()
            .into_iter()
            .filter(|f| self.simplex_in(f, index))
            .collect()
    }

    /// Designated star-shaped base point of `U_I`: the piece base for a
    /// single piece, the average of the piece bases otherwise (for a star
    /// cover this is the barycenter of the simplex `I`).
    pub fn base_point(&self, index: &[usize]) -> Vec<Q> {
        if index.len() == 1 {
            return self.pieces[index[0]].base.clone();
        }
        let d = self.complex.ambient_dim();
        let mut c = vec![Q::zero(); d];
        for &j in index {
            for (ci, b) in c.iter_mut().zip(&self.pieces[j].base) {
                *ci += b;
            }
        }
        let m = Q::from_integer((index.len() as i64).into());
        c.into_iter().map(|x| x / &m).collect()
    }

    pub fn base_point_f64(&self, index: &[usize]) -> Vec<f64> {
        self.base_point(index).iter().map(crate::forms::poly::q_to_f64).collect()
    }

    /// Random points in open facets contained in `U_I`. Barycentric weights
    /// are bounded below by `margin` so points stay off the facet boundary.
    pub fn sample_points<R: Rng + ?Sized>(&self, index: &[usize], count: usize, margin: f64, rng: &mut R) -> Vec<Vec<f64>> {
        let facets = self.facets_in(index);
        if facets.is_empty() {
            return vec![];
        }
        let coords: Vec<Vec<Vec<f64>>> = facets
            .iter()
            .map(|f| f.iter().map(|&v| self.complex.vertex_f64(v)).collect())
            .collect();
        let d = self.complex.ambient_dim();
        (0..count)
            .map(|i| {
                let verts = &coords[i % coords.len()];
                let m = verts.len();
                let mut w: Vec<f64> = (0..m).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let s: f64 = w.iter().sum();
                let scale = 1.0 - margin * m as f64;
                for wi in w.iter_mut() {
                    *wi = margin + scale * *wi / s;
                }
                let mut p = vec![0.0; d];
                for (wi, v) in w.iter().zip(verts) {
                    for (pk, vk) in p.iter_mut().zip(v) {
                        *pk += wi * vk;
                    }
                }
                p
            })
            .collect()
    }

    pub fn nerve(&self) -> Nerve {
        nerve(self)
    }
}

/// One piece per vertex: the open star of the vertex, based at the vertex.
pub fn star_cover(k: Arc<SimplicialComplex>) -> Cover {
    let pieces = (0..k.n_vertices())
        .map(|v| CoverPiece {
            vertices: BTreeSet::from([v]),
            base: k.vertex(v).to_vec(),
        })
        .collect();
    Cover::new(k, pieces).expect("star cover of a nonempty complex is valid")
}

/// Nerve of a cover: a simplex `[I]` for every nonempty intersection `U_I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Nerve(SimplicialComplex);

impl Deref for Nerve {
    type Target = SimplicialComplex;
    fn deref(&self) -> &SimplicialComplex {
        &self.0
    }
}

impl Nerve {
    pub fn complex(&self) -> &SimplicialComplex {
        &self.0
    }
}

fn nerve(cover: &Cover) -> Nerve {
    let mut simplices = BTreeSet::new();
    for f in cover.complex.facets() {
        let touched = cover.touched_by(&f);
        if touched.is_empty() {
            continue;
        }
        // int f lies in every piece it touches, so any subset of those
        // pieces has nonempty intersection
        simplices.insert(touched);
    }
    let simplices: Vec<Vec<usize>> = simplices.into_iter().collect();
    debug_assert!(simplices.iter().all(|s| nonempty_subsets(s).iter().all(|f| cover.intersects(f))));
    Nerve(SimplicialComplex::abstract_complex(cover.len(), simplices).expect("nerve data is valid"))
}
