//! The Cech-De Rham double complex over a cover by open stars, the zig-zag
//! descent of a closed form to Cech constants, period pairings with nerve
//! cycles, and the construction of global primitives.
//!
//! Conventions: `(δφ)_{i₀…i_{l+1}} = Σ_m (−1)^m φ_{i₀…î_m…i_{l+1}}` and the
//! total differential on `C^l(U, Ω^k)` is `D = δ + (−1)^l d`.

mod cochain;
mod constants;
mod primitive;
mod zigzag;

pub use cochain::{total_differential, CechCochain, DoubleElement};
pub use constants::{solve_constants, ConstantSolver, Infeasible};
pub use primitive::{global_primitive, GlobalPrimitive, PrimitiveOptions};
pub use zigzag::{integrate_over_cycle, localize, winding, zigzag, ConstantCochain, Period, RungDiagnostics, ZigzagOptions, ZigzagState};

use crate::forms::{FormError, NumericForm, PolyForm};
use crate::linalg::Q;
use crate::simplicial::{Chain, SimplicialError};

#[derive(Debug, Clone, thiserror::Error)]
pub enum CechError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Simplicial(#[from] SimplicialError),
    #[error("input form is not closed")]
    NotClosed,
    #[error("the form must have degree at least 1 (got {0})")]
    DegreeZero(usize),
    #[error("form lives in ℝ^{form} but the complex is realized in ℝ^{complex}")]
    AmbientMismatch { form: usize, complex: usize },
    #[error("residual {residual:e} at {point:?} on U_{index:?} exceeds tolerance {tol:e}")]
    Residual { index: Vec<usize>, point: Vec<f64>, residual: f64, tol: f64 },
    #[error("chain is not a cycle")]
    NotACycle,
    #[error("chain uses simplex {0:?}, which is not in the nerve")]
    NotInNerve(Vec<usize>),
    #[error("chain has dimension {found}, expected {expected}")]
    ChainDimension { expected: usize, found: usize },
    #[error("nonzero period {period} over nerve cycle {cycle}")]
    NonzeroPeriod { cycle: Chain, period: f64 },
    #[error("local primitives disagree on facet {facet:?}")]
    Inconsistent { facet: Vec<usize> },
    #[error("{0}")]
    Unsupported(String),
}

/// A form on some `U_I`, exact or numeric.
#[derive(Clone, Debug)]
pub enum LocalForm {
    Poly(PolyForm),
    Numeric(NumericForm),
}

impl LocalForm {
    pub fn n(&self) -> usize {
        match self {
            LocalForm::Poly(w) => w.n(),
            LocalForm::Numeric(w) => w.n(),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            LocalForm::Poly(w) => w.degree(),
            LocalForm::Numeric(w) => w.degree(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, LocalForm::Poly(_))
    }

    pub fn zero(n: usize, k: usize) -> Self {
        LocalForm::Poly(PolyForm::zero(n, k, false))
    }

    /// Exactly zero (numeric forms are never known to vanish).
    pub fn is_exact_zero(&self) -> bool {
        matches!(self, LocalForm::Poly(w) if w.is_zero())
    }

    pub fn d(&self) -> LocalForm {
        match self {
            LocalForm::Poly(w) => LocalForm::Poly(w.d()),
            LocalForm::Numeric(w) => LocalForm::Numeric(w.d()),
        }
    }

    pub fn to_numeric(&self) -> Result<NumericForm, FormError> {
        match self {
            LocalForm::Poly(w) => NumericForm::from_poly(w),
            LocalForm::Numeric(w) => Ok(w.clone()),
        }
    }

    pub fn combine(&self, a: i64, other: &LocalForm, b: i64) -> Result<LocalForm, FormError> {
        match (self, other) {
            (LocalForm::Poly(x), LocalForm::Poly(y)) => {
                Ok(LocalForm::Poly(x.scale(&Q::from_integer(a.into())).add(&y.scale(&Q::from_integer(b.into())))?))
            }
            _ => Ok(LocalForm::Numeric(self.to_numeric()?.combine(a as f64, &other.to_numeric()?, b as f64)?)),
        }
    }

    pub fn add(&self, other: &LocalForm) -> Result<LocalForm, FormError> {
        self.combine(1, other, 1)
    }

    pub fn sub(&self, other: &LocalForm) -> Result<LocalForm, FormError> {
        self.combine(1, other, -1)
    }

    /// Radial homotopy operator towards `base` with `ε = 0`.
    pub fn radial_homotopy(&self, base: &[Q]) -> Result<LocalForm, FormError> {
        match self {
            LocalForm::Poly(w) => Ok(LocalForm::Poly(w.radial_homotopy(base, &Q::from_integer(0.into()))?)),
            LocalForm::Numeric(w) => {
                let b: Vec<f64> = base.iter().map(crate::forms::poly::q_to_f64).collect();
                Ok(LocalForm::Numeric(w.radial_homotopy(&b, 0.0, crate::forms::numeric::homotopy_quad())?))
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FormError> {
        match self {
            LocalForm::Poly(w) => Ok(w.eval(x)),
            LocalForm::Numeric(w) => w.eval(x),
        }
    }

    pub fn d_eval(&self, x: &[f64]) -> Result<Vec<f64>, FormError> {
        match self {
            LocalForm::Poly(w) => Ok(w.d().eval(x)),
            LocalForm::Numeric(w) => w.d_eval(x),
        }
    }
}

impl From<PolyForm> for LocalForm {
    fn from(w: PolyForm) -> Self {
        LocalForm::Poly(w)
    }
}

impl From<NumericForm> for LocalForm {
    fn from(w: NumericForm) -> Self {
        LocalForm::Numeric(w)
    }
}
