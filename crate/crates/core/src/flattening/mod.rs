//! Regular families of hypersurfaces, the stagewise flattening map and the
//! cone-containment constants.
//!
//! Points live in ℝ^{n+1}; the last axis plays the role of the vertical
//! direction. Each stage of a family carries a direction `λ_k` with
//! `λ_k·e_{n+1} > 0` and functions on `N_λ = λ^⊥`, written in the
//! coordinates of the orthonormal basis of `N_λ` obtained by Gram-Schmidt
//! from `e_{1,λ}, …, e_{n,λ}` (so the first basis vector is
//! `e_{1,λ}/|e_{1,λ}|`).

mod catalog;
mod cone;
mod family;
mod map;

use thiserror::Error;

use crate::expr::ExprError;
use crate::lifts::LiftError;

pub use catalog::{cone_pair, family_catalog, lying_pair, parallel_pair, single_plane, tilted_planes};
pub use cone::{graph_cone_bound, lifted_axis, tilted_cone_bound, transfer_aperture, Cone, ConeCheck, TiltedConeCheck};
pub use family::{FamilyReport, RegularFamily, SampleCheck, Stage, StageSpec, VerifySpec};
pub use map::{
    bilipschitz_estimate, build_flattening, flatten_cone_check, BilipschitzReport, FlattenConeReport, FlatteningMap, MapReport, RoundTrip, StageAperture,
    VerticalLineReport, BOUNDARY_TOL,
};

#[derive(Debug, Error)]
pub enum FlattenError {
    #[error("axis {0:?} is not a unit vector")]
    NotUnit(Vec<f64>),
    #[error("aperture {0} outside [0, 1)")]
    Aperture(f64),
    #[error("dimension mismatch")]
    Dimension,
    #[error("direction is not tilted upwards (last component {0})")]
    NotTilted(f64),
    #[error("function does not vanish at the origin (value {0})")]
    NotThroughOrigin(f64),
    #[error("invalid family: {0}")]
    Family(String),
    #[error("region membership of {point:?} is ambiguous at stage {stage}")]
    Ambiguous { point: Vec<f64>, stage: usize },
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
