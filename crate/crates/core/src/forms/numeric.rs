//! Forms given by a pointwise evaluator.

use std::fmt;
use std::sync::Arc;

use super::{binomial, subset_rank, subsets, FormError, PolyForm};
use crate::quadrature::{integrate_vec, QuadConfig, QuadError};

/// Maps a point to the coefficient table of a form, indexed by the
/// lexicographic list of strictly increasing index sets.
pub type Evaluator = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, FormError> + Send + Sync>;

pub const DEFAULT_FD_STEP: f64 = 1e-6;

#[derive(Clone)]
pub struct NumericForm {
    n: usize,
    k: usize,
    label: String,
    eval: Evaluator,
    deriv: Option<Evaluator>,
    fd_step: f64,
}

impl fmt::Debug for NumericForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericForm")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("label", &self.label)
            .field("analytic_derivative", &self.deriv.is_some())
            .finish()
    }
}

impl NumericForm {
    pub fn new(n: usize, k: usize, label: impl Into<String>, eval: Evaluator) -> Self {
        NumericForm {
            n,
            k,
            label: label.into(),
            eval,
            deriv: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    /// Supplies an analytic evaluator for `dω`.
    pub fn with_derivative(mut self, deriv: Evaluator) -> Self {
        self.deriv = Some(deriv);
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FormError> {
        if x.len() != self.n {
            return Err(FormError::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        let v = (self.eval)(x)?;
        let want = binomial(self.n, self.k);
        if v.len() != want {
            return Err(FormError::Malformed(format!(
                "evaluator {} returned {} coefficients, expected {want}",
                self.label,
                v.len()
            )));
        }
        Ok(v)
    }

    /// Coefficients of `dω` at `x`: analytic if available, otherwise central
    /// differences with the configured step.
    pub fn d_eval(&self, x: &[f64]) -> Result<Vec<f64>, FormError> {
        if let Some(d) = &self.deriv {
            return d(x);
        }
        let n = self.n;
        let k = self.k;
        let out_sets = subsets(n, k + 1);
        if out_sets.is_empty() {
            return Ok(vec![]);
        }
        let h = self.fd_step;
        // partials[j][I] = ∂_j c_I
        let mut partials = Vec::with_capacity(n);
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let fp = self.eval(&xp)?;
            let fm = self.eval(&xm)?;
            partials.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
        }
        Ok(out_sets
            .iter()
            .map(|set| {
                // (dω)_J = Σ_m (−1)^m ∂_{j_m} c_{J ∖ j_m}
                let mut s = 0.0;
                for m in 0..set.len() {
                    let mut rest = set.clone();
                    let j = rest.remove(m);
                    let v = partials[j][subset_rank(n, &rest)];
                    s += if m % 2 == 0 { v } else { -v };
                }
                s
            })
            .collect())
    }

    /// `dω` as a numeric form.
    pub fn d(&self) -> NumericForm {
        let me = self.clone();
        NumericForm::new(self.n, self.k + 1, format!("d({})", self.label), Arc::new(move |x| me.d_eval(x)))
            .with_fd_step(self.fd_step)
    }

    /// Exact-coefficient form viewed numerically, with its exact derivative.
    pub fn from_poly(w: &PolyForm) -> Result<NumericForm, FormError> {
        if w.has_t() {
            return Err(FormError::ParameterMismatch);
        }
        let n = w.n();
        let (a, b) = (w.clone(), w.d());
        let ev: Evaluator = Arc::new(move |x| Ok(a.eval(x)));
        let dv: Evaluator = Arc::new(move |x| Ok(b.eval(x)));
        Ok(NumericForm::new(n, w.degree(), format!("{w}"), ev).with_derivative(dv))
    }

    pub fn zero(n: usize, k: usize) -> NumericForm {
        let len = binomial(n, k);
        let dlen = binomial(n, k + 1);
        NumericForm::new(n, k, "0", Arc::new(move |_| Ok(vec![0.0; len])))
            .with_derivative(Arc::new(move |_| Ok(vec![0.0; dlen])))
    }

    /// The constant 0-form `c`.
    pub fn constant(n: usize, c: f64) -> NumericForm {
        NumericForm::new(n, 0, format!("{c}"), Arc::new(move |_| Ok(vec![c])))
            .with_derivative(Arc::new(move |_| Ok(vec![0.0; n])))
    }

    /// Linear combination `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &NumericForm, b: f64) -> Result<NumericForm, FormError> {
        if self.n != other.n || self.k != other.k {
            return Err(FormError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let (l, r) = (self.clone(), other.clone());
        let ev: Evaluator = Arc::new(move |x| {
            let u = l.eval(x)?;
            let v = r.eval(x)?;
            Ok(u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect())
        });
        let label = format!("{a}·{} + {b}·{}", self.label, other.label);
        let mut out = NumericForm::new(self.n, self.k, label, ev).with_fd_step(self.fd_step);
        if self.deriv.is_some() && other.deriv.is_some() {
            let (l, r) = (self.clone(), other.clone());
            out = out.with_derivative(Arc::new(move |x| {
                let u = l.d_eval(x)?;
                let v = r.d_eval(x)?;
                Ok(u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect())
            }));
        }
        Ok(out)
    }

    pub fn sub(&self, other: &NumericForm) -> Result<NumericForm, FormError> {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &NumericForm) -> Result<NumericForm, FormError> {
        self.combine(1.0, other, 1.0)
    }

    /// The winding form `(x dy − y dx)/(x² + y²)` on ℝ² ∖ {0}.
    pub fn winding() -> NumericForm {
        let ev: Evaluator = Arc::new(|p: &[f64]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            if r2 < 1e-300 {
                return Err(FormError::OutsideDomain(p.to_vec()));
            }
            Ok(vec![-p[1] / r2, p[0] / r2])
        });
        let dv: Evaluator = Arc::new(|p: &[f64]| {
            if p[0] * p[0] + p[1] * p[1] < 1e-300 {
                return Err(FormError::OutsideDomain(p.to_vec()));
            }
            Ok(vec![0.0])
        });
        NumericForm::new(2, 1, "winding", ev).with_derivative(dv)
    }

    /// Radial homotopy operator towards `base`, evaluated by adaptive
    /// quadrature in `t`:
    ///
    /// `K_ε ω(x) = Σ_I Σ_m (−1)^m (x − b)_{i_m} ∫_ε^1 t^{k−1} c_I(b + t(x − b)) dt  dx_{I∖i_m}`.
    pub fn radial_homotopy(&self, base: &[f64], eps: f64, cfg: QuadConfig) -> Result<NumericForm, FormError> {
        if !(0.0..1.0).contains(&eps) {
            return Err(FormError::BadEpsilon(eps.to_string()));
        }
        if base.len() != self.n {
            return Err(FormError::DimensionMismatch {
                expected: self.n,
                found: base.len(),
            });
        }
        if self.k == 0 {
            return Err(FormError::InvalidDegree {
                degree: 0,
                reason: "the homotopy operator lowers degree".into(),
            });
        }
        let (n, k) = (self.n, self.k);
        let me = self.clone();
        let b = base.to_vec();
        let in_sets = subsets(n, k);
        let ev: Evaluator = Arc::new(move |x: &[f64]| {
            let dx: Vec<f64> = x.iter().zip(&b).map(|(xi, bi)| xi - bi).collect();
            let integrand = |t: f64| -> Result<Vec<f64>, FormError> {
                let p: Vec<f64> = b.iter().zip(&dx).map(|(bi, di)| bi + t * di).collect();
                let c = me.eval(&p)?;
                let w = t.powi(k as i32 - 1);
                Ok(c.into_iter().map(|v| v * w).collect())
            };
            let integrals = integrate_vec(integrand, eps, 1.0, &cfg).map_err(|e| match e {
                QuadError::Eval(inner) => inner,
                other => FormError::Quadrature(other.to_string()),
            })?;
            let mut out = vec![0.0; binomial(n, k - 1)];
            for (set, val) in in_sets.iter().zip(&integrals.value) {
                for m in 0..set.len() {
                    let mut rest = set.clone();
                    let i = rest.remove(m);
                    let term = dx[i] * val;
                    let pos = subset_rank(n, &rest);
                    out[pos] += if m % 2 == 0 { term } else { -term };
                }
            }
            Ok(out)
        });
        Ok(NumericForm::new(n, k - 1, format!("K[{}]", self.label), ev).with_fd_step(self.fd_step))
    }
}

/// Default quadrature settings for numeric homotopy operators.
pub fn homotopy_quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 400,
    }
}
