//! Piecewise-smooth parametrized curves and line integrals of 1-forms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::{FormError, NumericForm};
use crate::quadrature::{integrate_vec, QuadConfig, QuadError};

pub type CurveFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// One smooth piece, parametrized over `s ∈ [0, 1]`.
#[derive(Clone)]
pub enum PathPiece {
    Segment { from: Vec<f64>, to: Vec<f64> },
    /// Planar arc `center + radius (cos θ, sin θ)` for θ from `start` to `end`.
    Arc { center: [f64; 2], radius: f64, start: f64, end: f64 },
    Custom { point: CurveFn, velocity: CurveFn },
}

impl fmt::Debug for PathPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathPiece::Segment { from, to } => write!(f, "Segment({from:?} -> {to:?})"),
            PathPiece::Arc { center, radius, start, end } => {
                write!(f, "Arc(c={center:?}, r={radius}, {start}..{end})")
            }
            PathPiece::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl PathPiece {
    pub fn point(&self, s: f64) -> Vec<f64> {
        match self {
            PathPiece::Segment { from, to } => from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect(),
            PathPiece::Arc { center, radius, start, end } => {
                let th = start + s * (end - start);
                vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
            PathPiece::Custom { point, .. } => point(s),
        }
    }

    pub fn velocity(&self, s: f64) -> Vec<f64> {
        match self {
            PathPiece::Segment { from, to } => from.iter().zip(to).map(|(a, b)| b - a).collect(),
            PathPiece::Arc { radius, start, end, .. } => {
                let th = start + s * (end - start);
                let w = end - start;
                vec![-radius * th.sin() * w, radius * th.cos() * w]
            }
            PathPiece::Custom { velocity, .. } => velocity(s),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Path {
    pub pieces: Vec<PathPiece>,
}

impl Path {
    pub fn new(pieces: Vec<PathPiece>) -> Self {
        Path { pieces }
    }

    /// Closed polygon through `vertices` (the last vertex joins the first).
    pub fn polygon(vertices: &[Vec<f64>]) -> Self {
        let n = vertices.len();
        Path {
            pieces: (0..n)
                .map(|i| PathPiece::Segment {
                    from: vertices[i].clone(),
                    to: vertices[(i + 1) % n].clone(),
                })
                .collect(),
        }
    }

    /// Counterclockwise circle.
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Path {
            pieces: vec![PathPiece::Arc {
                center,
                radius,
                start: 0.0,
                end: 2.0 * PI,
            }],
        }
    }
}

/// `∫_γ ω` for a 1-form, summed over pieces, each integrated adaptively.
/// Returns the value and the accumulated error estimate.
pub fn line_integral(w: &NumericForm, path: &Path, cfg: &QuadConfig) -> Result<(f64, f64), FormError> {
    if w.degree() != 1 {
        return Err(FormError::InvalidDegree {
            degree: w.degree(),
            reason: "line integrals need a 1-form".into(),
        });
    }
    let mut total = 0.0;
    let mut err = 0.0;
    for piece in &path.pieces {
        let f = |s: f64| -> Result<Vec<f64>, FormError> {
            let p = piece.point(s);
            let v = piece.velocity(s);
            let c = w.eval(&p)?;
            Ok(vec![c.iter().zip(&v).map(|(a, b)| a * b).sum()])
        };
        let r = integrate_vec(f, 0.0, 1.0, cfg).map_err(|e| match e {
            QuadError::Eval(inner) => inner,
            other => FormError::Quadrature(other.to_string()),
        })?;
        total += r.value[0];
        err += r.error;
    }
    Ok((total, err))
}
