//! `L^p` norms of forms on the warped cone `M × (0, 1]` with metric
//! `dr² + r^{2α} g_M`, `M` the flat unit `m`-torus.
//!
//! A radially constant `k`-form (no `dr` term, coefficients independent of
//! `r`) has pointwise norm `r^{−kα} |ω|_M` and the volume is
//! `r^{αm} dr dV_M`, so
//!
//! ```text
//! ‖ω‖_{L^p(r > ε)}^p = ∫_ε^1 r^{αm − αkp} dr · ∫_M |ω|_M^p dV_M
//! ```
//!
//! which is finite as `ε → 0` iff `p < (αm + 1)/(kα)`.
//!
//! The second half of the module measures the truncated homotopy operator
//! `R_ε` of the model retraction `r_t(y, s) = (y, ts)` on probe forms
//! `s^b ds ∧ β`, for comparison with the bound
//! `p/(p(1 + (k−1)λ) − μ) · (1 − ε^{−μ/p + (k−1)λ + 1})`.

use std::sync::Arc;

use num_rational::Rational64;
use serde::Serialize;
use thiserror::Error;

use crate::exec::Exec;
use crate::lifts::{fit_growth_exponents, GrowthFit, GrowthSpec, LiftError, Retraction};
use crate::linalg::fit_line;
use crate::quadrature::{integrate, QuadConfig};

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("form degree must be at least 1")]
    DegreeZero,
    #[error("invalid cone metric: {0}")]
    InvalidMetric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("p = {p} is at or below the threshold {threshold}")]
    BelowThreshold { p: f64, threshold: f64 },
    #[error("schedule has {len} points, at least 3 are needed for a fit")]
    ScheduleTooShort { len: usize },
    #[error("empty p-grid")]
    EmptyGrid,
    #[error("the probe form has infinite L^p norm (b = {b}, need b > {min})")]
    InfiniteNorm { b: f64, min: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Lift(#[from] LiftError),
}

/// Warping exponent `α ≥ 1` over the flat unit `m`-torus.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeMetric {
    alpha: Rational64,
    m: usize,
}

impl ConeMetric {
    pub fn new(alpha: Rational64, m: usize) -> Result<Self, ConeError> {
        if alpha < Rational64::from_integer(1) {
            return Err(ConeError::InvalidMetric(format!("α = {alpha} < 1")));
        }
        if m == 0 {
            return Err(ConeError::InvalidMetric("base dimension 0".into()));
        }
        Ok(ConeMetric { alpha, m })
    }

    pub fn integer(alpha: i64, m: usize) -> Result<Self, ConeError> {
        ConeMetric::new(Rational64::from_integer(alpha), m)
    }

    pub fn alpha(&self) -> Rational64 {
        self.alpha
    }

    pub fn alpha_f64(&self) -> f64 {
        *self.alpha.numer() as f64 / *self.alpha.denom() as f64
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Volume of the base torus.
    pub fn base_volume(&self) -> f64 {
        1.0
    }
}

pub type BaseNorm = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A radially constant `k`-form, described by its pointwise base norm
/// `|ω|_M` on the torus `[0, 1)^m`.
#[derive(Clone)]
pub struct RadialForm {
    k: usize,
    base_norm: BaseNorm,
    label: String,
}

impl std::fmt::Debug for RadialForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialForm").field("k", &self.k).field("label", &self.label).finish()
    }
}

impl RadialForm {
    pub fn new(k: usize, label: impl Into<String>, base_norm: BaseNorm) -> Self {
        RadialForm {
            k,
            base_norm,
            label: label.into(),
        }
    }

    /// Constant base norm `c`, e.g. `dy₁` (`c = 1`) on the torus.
    pub fn constant(k: usize, c: f64) -> Self {
        let c = c.abs();
        RadialForm::new(k, format!("constant {c}"), Arc::new(move |_| c))
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn base_norm(&self, y: &[f64]) -> f64 {
        (self.base_norm)(y)
    }
}

/// `ε_j = 2^{−j}` for `j = j_min..=j_max`, plus the trapezoid resolution on
/// the base.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationSchedule {
    pub j_min: u32,
    pub j_max: u32,
    /// Points per axis of the base grid (used for `m ≤ 2`).
    pub base_points: usize,
}

impl Default for TruncationSchedule {
    fn default() -> Self {
        TruncationSchedule {
            j_min: 4,
            j_max: 20,
            base_points: 64,
        }
    }
}

impl TruncationSchedule {
    pub fn new(j_min: u32, j_max: u32) -> Result<Self, ConeError> {
        if j_max <= j_min {
            return Err(ConeError::InvalidArgument(format!("schedule {j_min}:{j_max} is empty")));
        }
        Ok(TruncationSchedule {
            j_min,
            j_max,
            ..Default::default()
        })
    }

    pub fn epsilons(&self) -> Vec<f64> {
        (self.j_min..=self.j_max).map(|j| 0.5f64.powi(j as i32)).collect()
    }
}

/// `(αm + 1)/(kα)`, exactly.
pub fn critical_exponent(alpha: Rational64, m: usize, k: usize) -> Result<Rational64, ConeError> {
    if k == 0 {
        return Err(ConeError::DegreeZero);
    }
    let m = Rational64::from_integer(m as i64);
    let k = Rational64::from_integer(k as i64);
    Ok((alpha * m + 1) / (k * alpha))
}

/// `∫_lo^hi r^a dr` for `0 < lo ≤ hi`, stable near `a = −1`.
pub fn power_integral(a: f64, lo: f64, hi: f64) -> f64 {
    let b = a + 1.0;
    let (lh, ll) = (hi.ln(), lo.ln());
    if b.abs() < 1e-12 {
        return lh - ll;
    }
    // (hi^b − lo^b)/b = hi^b (1 − (lo/hi)^b)/b
    -(hi.powf(b)) * (b * (ll - lh)).exp_m1() / b
}

/// `∫_M f dV_M` by the product trapezoid rule, which on the torus is the
/// grid mean. For `m ≤ 2` the grid has `base_points` points per axis; for
/// larger `m` the per-axis count is chosen so that the total stays at most
/// `base_points²`.
pub fn base_integral(m: usize, base_points: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let total_budget = base_points.pow(m.min(2) as u32);
    let per_axis = if m <= 2 {
        base_points
    } else {
        ((total_budget as f64).powf(1.0 / m as f64).floor() as usize).max(2)
    };
    let total = per_axis.pow(m as u32);
    let mut y = vec![0.0; m];
    let mut sum = 0.0;
    for idx in 0..total {
        let mut r = idx;
        for yi in y.iter_mut() {
            *yi = (r % per_axis) as f64 / per_axis as f64;
            r /= per_axis;
        }
        sum += f(&y);
    }
    sum / total as f64
}

fn r_exponent(w: &RadialForm, g: &ConeMetric, p: f64) -> f64 {
    let a = g.alpha_f64();
    a * g.m() as f64 - a * w.degree() as f64 * p
}

/// `‖ω‖_{L^p(M × (ε, 1))}`.
pub fn lp_norm_truncated(w: &RadialForm, g: &ConeMetric, p: f64, eps: f64) -> Result<f64, ConeError> {
    lp_norm_with(w, g, p, eps, TruncationSchedule::default().base_points)
}

fn lp_norm_with(w: &RadialForm, g: &ConeMetric, p: f64, eps: f64, base_points: usize) -> Result<f64, ConeError> {
    check_p(p)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ConeError::InvalidArgument(format!("ε = {eps} not in (0, 1)")));
    }
    let m_int = base_integral(g.m(), base_points, |y| w.base_norm(y).powf(p)) * g.base_volume();
    if m_int == 0.0 {
        return Ok(0.0);
    }
    let r_int = power_integral(r_exponent(w, g, p), eps, 1.0);
    Ok((r_int * m_int).powf(1.0 / p))
}

fn check_p(p: f64) -> Result<(), ConeError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(ConeError::InvalidArgument(format!("p = {p} must be a finite number ≥ 1")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converges,
    Diverges,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converges => "converges",
            Verdict::Diverges => "diverges",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub p: f64,
    pub verdict: Verdict,
    /// Slope of `log ΔI_j` against `log(1/ε_j)`.
    pub slope: f64,
    pub fit_residual: f64,
    /// `true` when the integral exceeded the cap.
    pub capped: bool,
}

pub const SLOPE_TOL: f64 = 0.01;
pub const VALUE_CAP: f64 = 1e300;

/// Decides whether `‖ω‖_{L^p(r > ε)}` stays bounded as `ε → 0`.
///
/// The fit is done on the shell contributions
/// `ΔI_j = ∫_{ε_{j+1} < r < ε_j} |ω|^p dV`, not on the cumulative integral:
/// a convergent integral has geometrically shrinking shells (slope `< 0`),
/// a divergent one has shells that stay constant or grow (slope `≥ 0`). The
/// cumulative `log I(ε)` flattens out in both the convergent and the
/// logarithmic case, so it separates the regimes poorly.
pub fn detect_divergence(w: &RadialForm, g: &ConeMetric, p: f64, schedule: &TruncationSchedule) -> Result<DivergenceReport, ConeError> {
    check_p(p)?;
    let eps = schedule.epsilons();
    if eps.len() < 3 {
        return Err(ConeError::ScheduleTooShort { len: eps.len() });
    }
    let m_int = base_integral(g.m(), schedule.base_points, |y| w.base_norm(y).powf(p)) * g.base_volume();
    if m_int == 0.0 {
        return Ok(DivergenceReport {
            p,
            verdict: Verdict::Converges,
            slope: f64::NEG_INFINITY,
            fit_residual: 0.0,
            capped: false,
        });
    }
    let a = r_exponent(w, g, p);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut capped = false;
    for pair in eps.windows(2) {
        let shell = power_integral(a, pair[1], pair[0]) * m_int;
        let total = power_integral(a, pair[1], 1.0) * m_int;
        if !total.is_finite() || total > VALUE_CAP {
            capped = true;
            break;
        }
        xs.push(-pair[0].ln());
        ys.push(shell.ln());
    }
    let (slope, fit_residual) = match fit_line(&xs, &ys) {
        Some(f) => (f.slope, f.residual),
        None if capped => (f64::INFINITY, 0.0),
        None => return Err(ConeError::ScheduleTooShort { len: xs.len() }),
    };
    let verdict = if capped || slope > -SLOPE_TOL {
        Verdict::Diverges
    } else {
        Verdict::Converges
    };
    Ok(DivergenceReport {
        p,
        verdict,
        slope,
        fit_residual,
        capped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdScan {
    pub rows: Vec<DivergenceReport>,
    /// `[last convergent p, first divergent p]`, when the verdict flips.
    pub bracket: Option<(f64, f64)>,
    /// Number of verdict changes along the grid.
    pub flips: usize,
}

/// The grid `p_min + i·step`, `i = 0, 1, …` up to `p_max`.
pub fn p_grid(p_min: f64, p_max: f64, step: f64) -> Result<Vec<f64>, ConeError> {
    if !(step > 0.0) || !(p_max >= p_min) || !p_min.is_finite() || !p_max.is_finite() {
        return Err(ConeError::EmptyGrid);
    }
    let n = ((p_max - p_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| p_min + i as f64 * step).collect())
}

/// Runs [`detect_divergence`] over a p-grid.
pub fn scan_threshold(w: &RadialForm, g: &ConeMetric, grid: &[f64], schedule: &TruncationSchedule, exec: Exec) -> Result<ThresholdScan, ConeError> {
    if grid.is_empty() {
        return Err(ConeError::EmptyGrid);
    }
    let rows = exec
        .map_slice(grid, |&p| detect_divergence(w, g, p, schedule))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let flips = rows.windows(2).filter(|r| r[0].verdict != r[1].verdict).count();
    let bracket = rows
        .windows(2)
        .find(|r| r[0].verdict == Verdict::Converges && r[1].verdict == Verdict::Diverges)
        .map(|r| (r[0].p, r[1].p));
    Ok(ThresholdScan { rows, bracket, flips })
}

/// `(α, m, k)` cases used for the threshold checks.
pub const THRESHOLD_CATALOG: [(i64, usize, usize); 4] = [(1, 1, 1), (2, 1, 1), (1, 2, 1), (2, 2, 2)];

/// `μ/(1 + (k−1)λ)`: `R_ε` is bounded above this exponent.
pub fn bound_threshold(lambda: f64, mu: f64, k: usize) -> f64 {
    mu / (1.0 + (k as f64 - 1.0) * lambda)
}

/// `p/(p(1 + (k−1)λ) − μ) · (1 − ε^{−μ/p + (k−1)λ + 1})`.
pub fn homotopy_bound_constant(p: f64, lambda: f64, mu: f64, k: usize, eps: f64) -> Result<f64, ConeError> {
    if k == 0 {
        return Err(ConeError::DegreeZero);
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(ConeError::InvalidArgument(format!("ε = {eps} not in [0, 1)")));
    }
    let threshold = bound_threshold(lambda, mu, k);
    let km1 = k as f64 - 1.0;
    if !(p > threshold) {
        return Err(ConeError::BelowThreshold { p, threshold });
    }
    let expo = -mu / p + km1 * lambda + 1.0;
    let tail = if eps == 0.0 { 0.0 } else { eps.powf(expo) };
    Ok(p / (p * (1.0 + km1 * lambda) - mu) * (1.0 - tail))
}

/// The model retraction `r_t(y, s) = (y, ts)` written in coordinates
/// `(s^α y, s)` that are orthonormal for the cone metric: there it is the
/// diagonal map `(t^α z, t s)`.
pub fn model_retraction(g: &ConeMetric) -> Retraction {
    let a = g.alpha_f64();
    let mut w = vec![a; g.m()];
    w.push(1.0);
    Retraction::diagonal(w)
}

/// Growth exponents `λ̂, μ̂` of [`model_retraction`] from the lifts fit.
pub fn fit_model_exponents(g: &ConeMetric, seed: u64, exec: Exec) -> Result<GrowthFit, ConeError> {
    let r = model_retraction(g);
    let spec = GrowthSpec {
        seed,
        exec,
        ..GrowthSpec::unit_box(g.m() + 1)
    };
    Ok(fit_growth_exponents(&r, &spec)?)
}

/// The probe `ω = c · s^b ds ∧ β` with `β` a radially constant
/// `(k−1)`-form of base comass `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeForm {
    pub k: usize,
    pub b: f64,
    pub base_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RetractionReport {
    pub p: f64,
    pub eps: f64,
    pub norm: f64,
    pub homotopy_norm: f64,
    /// `‖R_ε ω‖_p / ‖ω‖_p` (0 for `ω = 0`).
    pub ratio: f64,
    /// `‖r_ε^* ω‖_p`.
    pub pullback_norm: f64,
}

impl ProbeForm {
    /// Exponent `γ = αm − (k−1)αp` of the radial weight in `|ω|^p dV`.
    fn gamma(&self, g: &ConeMetric, p: f64) -> f64 {
        let a = g.alpha_f64();
        a * g.m() as f64 - (self.k as f64 - 1.0) * a * p
    }

    /// Smallest `b` for which the norm is finite.
    pub fn min_b(k: usize, g: &ConeMetric, p: f64) -> f64 {
        let probe = ProbeForm { k, b: 0.0, base_norm: 1.0 };
        -(probe.gamma(g, p) + 1.0) / p
    }

    fn check(&self, g: &ConeMetric, p: f64) -> Result<f64, ConeError> {
        if self.k == 0 {
            return Err(ConeError::DegreeZero);
        }
        if self.k > g.m() + 1 {
            return Err(ConeError::InvalidArgument(format!("degree {} exceeds cone dimension", self.k)));
        }
        check_p(p)?;
        let gamma = self.gamma(g, p);
        let min = -(gamma + 1.0) / p;
        if !(self.b > min) {
            return Err(ConeError::InfiniteNorm { b: self.b, min });
        }
        Ok(gamma)
    }

    /// `log |ω|` at radius `s = e^{−u}`: the `ds` factor has unit length
    /// and `β` has length `s^{−(k−1)α} c`.
    fn log_pointwise(&self, g: &ConeMetric, u: f64) -> f64 {
        self.base_norm.ln() - u * (self.b - (self.k as f64 - 1.0) * g.alpha_f64())
    }

    /// `R_ε ω = c s^{b+1} (∫_ε^1 t^b dt) β`, from the `dt`-coefficient of
    /// `r^*ω = (ts)^b (t ds + s dt) ∧ β`. Log of the pointwise norm at
    /// `s = e^{−u}`.
    fn log_homotopy_pointwise(&self, g: &ConeMetric, u: f64, t_int: f64) -> f64 {
        self.log_pointwise(g, u) - u + t_int.ln()
    }
}

/// `‖R_ε ω‖_p / ‖ω‖_p` and `‖r_ε^* ω‖_p` for a probe form; closed-form
/// power integrals in `s`.
pub fn retraction_operator_experiment(w: &ProbeForm, g: &ConeMetric, p: f64, eps: f64) -> Result<RetractionReport, ConeError> {
    let gamma = w.check(g, p)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(ConeError::InvalidArgument(format!("ε = {eps} not in [0, 1)")));
    }
    let vol = g.base_volume();
    if w.base_norm == 0.0 {
        return Ok(RetractionReport {
            p,
            eps,
            norm: 0.0,
            homotopy_norm: 0.0,
            ratio: 0.0,
            pullback_norm: 0.0,
        });
    }
    let c = w.base_norm;
    let b1 = w.b + 1.0;
    // ∫_0^1 s^{bp+γ} ds
    let norm = c * (vol / (w.b * p + gamma + 1.0)).powf(1.0 / p);
    let t_int = if eps == 0.0 {
        // ∫_0^1 t^b dt diverges for b ≤ −1
        if b1 > 0.0 {
            1.0 / b1
        } else {
            f64::INFINITY
        }
    } else {
        power_integral(w.b, eps, 1.0)
    };
    let homotopy_norm = c * t_int * (vol / (b1 * p + gamma + 1.0)).powf(1.0 / p);
    // r_ε^* ω = ε^{b+1} ω on the relevant (non-dt) part
    let pullback_norm = if eps == 0.0 { 0.0 } else { eps.powf(b1) * norm };
    Ok(RetractionReport {
        p,
        eps,
        norm,
        homotopy_norm,
        ratio: homotopy_norm / norm,
        pullback_norm,
    })
}

/// The same quantities as [`retraction_operator_experiment`], with both
/// radial integrals done by adaptive quadrature (after `s = e^{−u}`).
pub fn retraction_experiment_quadrature(w: &ProbeForm, g: &ConeMetric, p: f64, eps: f64) -> Result<RetractionReport, ConeError> {
    let gamma = w.check(g, p)?;
    let vol = g.base_volume();
    let weight_exp = g.alpha_f64() * g.m() as f64;
    let cfg = QuadConfig {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_intervals: 5000,
    };
    let radial = |f: &dyn Fn(f64) -> f64, decay: f64| -> Result<f64, ConeError> {
        // ∫_0^1 f(s)^p s^{αm} ds = ∫_0^∞ f(e^{−u})^p e^{−(αm+1)u} du with f
        // given as log f(e^{−u}), truncated where the integrand is below
        // 1e−40 of its scale
        let upper = 92.0 / decay;
        integrate(|u| (p * f(u) - (weight_exp + 1.0) * u).exp(), 0.0, upper, &cfg)
            .map(|(v, _)| v)
            .map_err(|e| ConeError::Quadrature(format!("{e:?}")))
    };
    let decay_w = w.b * p + gamma + 1.0;
    let decay_h = decay_w + p;
    let norm = (vol * radial(&|u| w.log_pointwise(g, u), decay_w)?).powf(1.0 / p);
    let t_int = if eps == 0.0 && w.b <= -1.0 {
        Ok((f64::INFINITY, 0.0))
    } else if eps == 0.0 {
        // t^b may be singular at 0: substitute t = e^{−v}
        integrate(|v| (-(w.b + 1.0) * v).exp(), 0.0, 92.0 / (w.b + 1.0), &cfg)
    } else {
        integrate(|t| t.powf(w.b), eps, 1.0, &cfg)
    }
    .map_err(|e| ConeError::Quadrature(format!("{e:?}")))?
    .0;
    let homotopy_norm = if t_int.is_finite() {
        (vol * radial(&|u| w.log_homotopy_pointwise(g, u, t_int), decay_h)?).powf(1.0 / p)
    } else {
        f64::INFINITY
    };
    let pullback_norm = if eps == 0.0 {
        0.0
    } else {
        // r_ε^* ω = (εs)^b ε ds ∧ β, and |ds ∧ β| = c s^{−(k−1)α}
        let km1 = w.k as f64 - 1.0;
        let pulled = |u: f64| w.b * (eps.ln() - u) + eps.ln() + w.base_norm.ln() + km1 * g.alpha_f64() * u;
        (vol * radial(&pulled, decay_w)?).powf(1.0 / p)
    };
    Ok(RetractionReport {
        p,
        eps,
        norm,
        homotopy_norm,
        ratio: if norm == 0.0 { 0.0 } else { homotopy_norm / norm },
        pullback_norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorEstimate {
    pub p: f64,
    pub eps: f64,
    /// Largest `‖R_ε ω‖/‖ω‖` over the probe family.
    pub ratio: f64,
    /// Probe exponent attaining it.
    pub b: f64,
}

/// Supremum of the ratio over probes `s^b ds ∧ β` with
/// `b = b_min + η`, `η` log-spaced over `[1e−8, 1e4]`.
pub fn operator_norm_estimate(g: &ConeMetric, k: usize, p: f64, eps: f64, probes: usize) -> Result<OperatorEstimate, ConeError> {
    let min = ProbeForm::min_b(k, g, p);
    let probes = probes.max(2);
    let mut best = OperatorEstimate { p, eps, ratio: 0.0, b: min };
    for i in 0..probes {
        let eta = 10f64.powf(-8.0 + 12.0 * i as f64 / (probes - 1) as f64);
        let w = ProbeForm { k, b: min + eta, base_norm: 1.0 };
        let r = retraction_operator_experiment(&w, g, p, eps)?;
        if r.ratio > best.ratio {
            best.ratio = r.ratio;
            best.b = w.b;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn exponents() {
        assert_eq!(critical_exponent(r(1, 1), 1, 1).unwrap(), r(2, 1));
        assert_eq!(critical_exponent(r(2, 1), 1, 1).unwrap(), r(3, 2));
        assert_eq!(critical_exponent(r(2, 1), 3, 1).unwrap(), r(7, 2));
        assert!(matches!(critical_exponent(r(1, 1), 1, 0), Err(ConeError::DegreeZero)));
    }

    #[test]
    fn truncated_norms() {
        let g = ConeMetric::integer(1, 1).unwrap();
        let w = RadialForm::constant(1, 1.0);
        let v = lp_norm_truncated(&w, &g, 1.0, 0.25).unwrap();
        assert!((v - 0.75).abs() < 1e-14);
        let v = lp_norm_truncated(&w, &g, 2.0, 1e-3).unwrap();
        assert!((v * v - 1e3f64.ln()).abs() < 1e-12);
        assert_eq!(lp_norm_truncated(&RadialForm::constant(1, 0.0), &g, 2.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn verdicts() {
        let g = ConeMetric::integer(1, 1).unwrap();
        let w = RadialForm::constant(1, 1.0);
        let s = TruncationSchedule::default();
        assert_eq!(detect_divergence(&w, &g, 1.5, &s).unwrap().verdict, Verdict::Converges);
        assert_eq!(detect_divergence(&w, &g, 2.5, &s).unwrap().verdict, Verdict::Diverges);
        assert_eq!(detect_divergence(&w, &g, 2.0, &s).unwrap().verdict, Verdict::Diverges);
        let short = TruncationSchedule { j_min: 4, j_max: 5, base_points: 8 };
        assert!(matches!(detect_divergence(&w, &g, 2.0, &short), Err(ConeError::ScheduleTooShort { .. })));
    }

    #[test]
    fn scan_brackets_two() {
        let g = ConeMetric::integer(1, 1).unwrap();
        let w = RadialForm::constant(1, 1.0);
        let grid = p_grid(1.0, 3.0, 0.05).unwrap();
        assert_eq!(grid.len(), 41);
        let scan = scan_threshold(&w, &g, &grid, &TruncationSchedule::default(), Exec::Sequential).unwrap();
        let (lo, hi) = scan.bracket.unwrap();
        assert_eq!(scan.flips, 1);
        assert!(lo <= 2.0 && hi >= 2.0 - 0.05 && hi - lo < 0.051);
    }

    #[test]
    fn bound_constant() {
        for lambda in [0.3, 1.0, 4.0] {
            let c = homotopy_bound_constant(3.0, lambda, 0.0, 1, 0.25).unwrap();
            assert!((c - 0.75).abs() < 1e-15);
        }
        let c = homotopy_bound_constant(10.0, 1.0, 2.0, 2, 0.0).unwrap();
        assert!((c - 10.0 / 18.0).abs() < 1e-15);
        assert!(matches!(
            homotopy_bound_constant(2.0, 1.0, 2.0, 1, 0.5),
            Err(ConeError::BelowThreshold { .. })
        ));
        let vals: Vec<f64> = [3.0, 2.5, 2.1, 2.01]
            .iter()
            .map(|&p| homotopy_bound_constant(p, 1.0, 2.0, 1, 0.0).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let g = ConeMetric::integer(1, 1).unwrap();
        for (b, p, eps) in [(0.0, 3.0, 0.5), (-0.2, 4.0, 0.01), (2.0, 2.5, 0.0)] {
            let w = ProbeForm { k: 1, b, base_norm: 1.0 };
            let a = retraction_operator_experiment(&w, &g, p, eps).unwrap();
            let q = retraction_experiment_quadrature(&w, &g, p, eps).unwrap();
            for (x, y) in [(a.norm, q.norm), (a.homotopy_norm, q.homotopy_norm), (a.pullback_norm, q.pullback_norm)] {
                assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn zero_probe() {
        let g = ConeMetric::integer(1, 1).unwrap();
        let w = ProbeForm { k: 1, b: 0.0, base_norm: 0.0 };
        assert_eq!(retraction_operator_experiment(&w, &g, 3.0, 0.5).unwrap().ratio, 0.0);
    }

    #[test]
    fn base_grid_integrates_trigonometric_polynomial() {
        let v = base_integral(2, 64, |y| (2.0 * std::f64::consts::PI * y[0]).cos().powi(2) + y[1] * 0.0);
        assert!((v - 0.5).abs() < 1e-14);
        let v = base_integral(3, 64, |_| 2.0);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
