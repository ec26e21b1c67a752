//! Cell towers, standard lifts of deformation retractions, the Lipschitz
//! criterion for band lifts, and fitted derivative growth exponents.
//!
//! A [`CellTower`] is a box `B ⊂ ℝⁿ⁰` followed by levels, each a graph
//! `{y = θ(x)}` or a band `{θ₁(x) < y < θ₂(x)}` over everything before it. A
//! [`Retraction`] is a base map on the box (diagonal powers `t^{wᵢ} xᵢ` or
//! explicit expressions) together with the levels it has been lifted over.
//! Every estimate here is a sampled envelope, not a certificate.

mod criterion;
mod growth;
mod retraction;
mod tower;

pub use criterion::{criterion_ratio, lipschitz_criterion, sampled_lipschitz, Curve, CriterionReport, CriterionSpec, Witness, UNBOUNDED_RATIO};
pub use growth::{fit_growth_exponents, log_grid, GrowthFit, GrowthRow, GrowthSpec};
pub use retraction::{jacobian_fd, standard_lift, BaseMap, Jacobian, Retraction};
pub use tower::{CellTower, FunctionDescriptor, Level, LipschitzCheck, BAND_MARGIN};

use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("point has {found} coordinates, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("degenerate fiber at {point:?}: band width {width}")]
    DegenerateFiber { point: Vec<f64>, width: f64 },
    #[error("bands must satisfy θ₁ < θ₂; violated at {point:?}")]
    BandOrder { point: Vec<f64> },
    #[error("all criterion denominators vanish")]
    DegenerateCriterion,
    #[error("invalid sample specification: {0}")]
    Spec(String),
    #[error("could not draw admissible samples ({0})")]
    Sampling(String),
}
