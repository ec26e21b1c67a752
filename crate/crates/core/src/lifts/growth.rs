use serde::{Deserialize, Serialize};

use super::{CellTower, Curve, LiftError, Retraction};
use crate::exec::{chunks, Exec};
use crate::linalg::fit_line;
use crate::random::{chunk_rng, CHUNK};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    /// Where spatial samples are drawn.
    pub cell: CellTower,
    pub cloud: usize,
    pub t_grid: Vec<f64>,
    /// Extra sample points along curves, evaluated at every `t` of the curve.
    #[serde(default)]
    pub curves: Vec<Curve>,
    /// Band samples narrower than this are rejected.
    #[serde(default = "default_min_width")]
    pub min_width: f64,
    /// RMS residual of the log-log fits above which the growth is flagged
    /// as not a power law.
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

fn default_min_width() -> f64 {
    1e-3
}

fn default_residual_tol() -> f64 {
    0.05
}

/// `count` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

impl GrowthSpec {
    /// 2000 samples of the open box `(0, 1)ⁿ`, `t` log-spaced on
    /// `[10⁻³, 1]`.
    pub fn unit_box(n: usize) -> Self {
        GrowthSpec::on(CellTower::new(vec![0.0; n], vec![1.0; n]).expect("nonempty box"))
    }

    pub fn on(cell: CellTower) -> Self {
        GrowthSpec {
            cell,
            cloud: 2000,
            t_grid: log_grid(1e-3, 1.0, 13),
            curves: Vec::new(),
            min_width: default_min_width(),
            residual_tol: default_residual_tol(),
            seed: 0,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub t: f64,
    /// Sampled `sup_q ‖Dr_t(q)‖` (largest entry).
    pub sup_norm: f64,
    /// Sampled `inf_q |det Dr_t(q)|`.
    pub inf_det: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    /// Slope of `log sup ‖Dr_t‖` against `log t` (upper envelope).
    pub lambda: f64,
    /// Slope of `log inf |det Dr_t|` against `log t` (lower envelope).
    pub mu: f64,
    pub lambda_residual: f64,
    pub mu_residual: f64,
    pub power_law: bool,
    pub rows: Vec<GrowthRow>,
    pub samples: usize,
}

/// Fits `‖Dr_t‖ ≲ t^λ` and `|det Dr_t| ≳ t^μ` on sampled envelopes.
pub fn fit_growth_exponents(r: &Retraction, spec: &GrowthSpec) -> Result<GrowthFit, LiftError> {
    if spec.cell.dim() != r.dim() {
        return Err(LiftError::Spec(format!("cell has dimension {}, retraction {}", spec.cell.dim(), r.dim())));
    }
    if spec.t_grid.len() < 2 || spec.t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(LiftError::Spec("t-grid needs at least two positive values".into()));
    }
    let nt = spec.t_grid.len();
    // per chunk: (sup ‖D‖, inf |det|) for every t
    let parts = spec.exec.map_slice(&chunks(spec.cloud, CHUNK), |&(start, len)| -> Result<Vec<(f64, f64)>, LiftError> {
        let mut rng = chunk_rng(spec.seed, (start / CHUNK) as u64);
        let mut acc = vec![(0.0f64, f64::INFINITY); nt];
        for _ in 0..len {
            let q = spec.cell.sample(&mut rng, spec.min_width)?;
            for (k, &t) in spec.t_grid.iter().enumerate() {
                let j = r.jacobian(&q, t)?;
                acc[k].0 = acc[k].0.max(j.max_norm());
                acc[k].1 = acc[k].1.min(j.det().abs());
            }
        }
        Ok(acc)
    });
    let mut acc = vec![(0.0f64, f64::INFINITY); nt];
    for part in parts {
        for (a, b) in acc.iter_mut().zip(part?) {
            a.0 = a.0.max(b.0);
            a.1 = a.1.min(b.1);
        }
    }
    let mut samples = spec.cloud;
    for c in &spec.curves {
        for &tc in &c.t {
            let q = c.point(tc)?;
            samples += 1;
            for (k, &t) in spec.t_grid.iter().enumerate() {
                let j = r.jacobian(&q, t)?;
                acc[k].0 = acc[k].0.max(j.max_norm());
                acc[k].1 = acc[k].1.min(j.det().abs());
            }
        }
    }
    if samples == 0 {
        return Err(LiftError::Spec("no samples".into()));
    }
    let rows: Vec<GrowthRow> = spec
        .t_grid
        .iter()
        .zip(&acc)
        .map(|(&t, &(s, d))| GrowthRow { t, sup_norm: s, inf_det: d })
        .collect();
    let lt: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let ln: Vec<f64> = rows.iter().map(|r| r.sup_norm.ln()).collect();
    let ld: Vec<f64> = rows.iter().map(|r| r.inf_det.ln()).collect();
    let bad = |v: &[f64]| v.iter().any(|x| !x.is_finite());
    if bad(&ln) || bad(&ld) {
        return Err(LiftError::Spec("zero derivative envelope, log-log fit impossible".into()));
    }
    let fl = fit_line(&lt, &ln).expect("at least two distinct t");
    let fd = fit_line(&lt, &ld).expect("at least two distinct t");
    Ok(GrowthFit {
        lambda: fl.slope,
        mu: fd.slope,
        lambda_residual: fl.residual,
        mu_residual: fd.residual,
        power_law: fl.residual <= spec.residual_tol && fd.residual <= spec.residual_tol,
        rows,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{standard_lift, FunctionDescriptor, Level};
    use super::*;

    #[test]
    fn radial_map_exponents() {
        let fit = fit_growth_exponents(&Retraction::diagonal(vec![1.0, 1.0]), &GrowthSpec::unit_box(2)).unwrap();
        assert!((fit.lambda - 1.0).abs() < 1e-9);
        assert!((fit.mu - 2.0).abs() < 1e-9);
        assert!(fit.power_law);
    }

    #[test]
    fn weighted_band_lift() {
        let cell = CellTower::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap().with_level(Level::Band {
            lower: FunctionDescriptor::new("0", 0.0).unwrap(),
            upper: FunctionDescriptor::new("abs(x1^2 - x2)", 3.0).unwrap(),
        });
        let base = Retraction::custom(&["t*x1", "t^2*x2"]).unwrap();
        let r = standard_lift(&base, cell.levels[0].clone());
        let spec = GrowthSpec {
            cloud: 500,
            ..GrowthSpec::on(cell)
        };
        let fit = fit_growth_exponents(&r, &spec).unwrap();
        assert!((fit.mu - 5.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.lambda - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_power_law_flagged() {
        // ‖D‖ = t + t^3 / 1e-3 bends on the log grid
        let r = Retraction::custom(&["t*x1 + 1000*t^3*x1"]).unwrap();
        let fit = fit_growth_exponents(&r, &GrowthSpec::unit_box(1)).unwrap();
        assert!(!fit.power_law);
    }
}
