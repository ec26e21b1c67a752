use serde::{Deserialize, Serialize};

use super::{CellTower, FunctionDescriptor, LiftError, Retraction};
use crate::exec::{chunks, Exec};
use crate::expr::Expr;
use crate::random::{chunk_rng, in_box, CHUNK};

/// Ratios above this are reported as an unbounded criterion.
pub const UNBOUNDED_RATIO: f64 = 1e3;

/// An adversarial curve `t ↦ x(t)` in the base; the retraction is evaluated
/// at the same `t` (so `x1 = t, x2 = t^2 + t^5` probes `r'_t` along the curve).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub x: Vec<Expr>,
    pub t: Vec<f64>,
}

impl Curve {
    pub fn new(components: &[&str], t: Vec<f64>) -> Result<Self, LiftError> {
        Ok(Curve {
            x: components.iter().map(|s| Expr::parse(s)).collect::<Result<_, _>>()?,
            t,
        })
    }

    pub fn point(&self, t: f64) -> Result<Vec<f64>, LiftError> {
        Ok(self.x.iter().map(|e| e.eval(&[], t)).collect::<Result<_, _>>()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    /// Random points in the base box `[lo, hi]`.
    pub cloud: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Retraction times for the cloud.
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub curves: Vec<Curve>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub t: f64,
    pub ratio: f64,
    /// `None` for the random cloud, otherwise the curve index.
    pub curve: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub sup_ratio: f64,
    pub witness: Witness,
    /// `(curve, t, ratio)` for every curve sample.
    pub curve_rows: Vec<(usize, f64, f64)>,
    pub bounded: bool,
    pub evaluated: usize,
}

/// `|θa(r'_t x) − θb(r'_t x)| / |θa(x) − θb(x)|`, or `None` when the
/// denominator is below `1e−300`.
pub fn criterion_ratio(a: &FunctionDescriptor, b: &FunctionDescriptor, r: &Retraction, x: &[f64], t: f64) -> Result<Option<f64>, LiftError> {
    let den = (a.eval(x)? - b.eval(x)?).abs();
    if den < 1e-300 {
        return Ok(None);
    }
    let y = r.eval(x, t)?;
    Ok(Some((a.eval(&y)? - b.eval(&y)?).abs() / den))
}

/// Sampled supremum of the band criterion over a cloud and adversarial
/// curves.
pub fn lipschitz_criterion(
    a: &FunctionDescriptor,
    b: &FunctionDescriptor,
    r: &Retraction,
    spec: &CriterionSpec,
    exec: Exec,
) -> Result<CriterionReport, LiftError> {
    if spec.lo.len() != r.dim() || spec.hi.len() != r.dim() {
        return Err(LiftError::Spec(format!("box has dimension {}, retraction {}", spec.lo.len(), r.dim())));
    }
    let mut best: Option<Witness> = None;
    let mut evaluated = 0;
    let consider = |w: Witness, best: &mut Option<Witness>| {
        if best.as_ref().is_none_or(|b| w.ratio > b.ratio) {
            *best = Some(w);
        }
    };
    let mut curve_rows = Vec::new();
    for (ci, c) in spec.curves.iter().enumerate() {
        for &t in &c.t {
            let x = c.point(t)?;
            if let Some(ratio) = criterion_ratio(a, b, r, &x, t)? {
                evaluated += 1;
                curve_rows.push((ci, t, ratio));
                consider(Witness { x, t, ratio, curve: Some(ci) }, &mut best);
            }
        }
    }
    let parts = exec.map_slice(&chunks(spec.cloud, CHUNK), |&(start, len)| -> Result<(usize, Option<Witness>), LiftError> {
        let mut rng = chunk_rng(spec.seed, (start / CHUNK) as u64);
        let mut local: Option<Witness> = None;
        let mut n = 0;
        for _ in 0..len {
            let x = in_box(&mut rng, &spec.lo, &spec.hi);
            for &t in &spec.t_grid {
                if let Some(ratio) = criterion_ratio(a, b, r, &x, t)? {
                    n += 1;
                    if local.as_ref().is_none_or(|w| ratio > w.ratio) {
                        local = Some(Witness { x: x.clone(), t, ratio, curve: None });
                    }
                }
            }
        }
        Ok((n, local))
    });
    for part in parts {
        let (n, w) = part?;
        evaluated += n;
        if let Some(w) = w {
            consider(w, &mut best);
        }
    }
    let witness = best.ok_or(LiftError::DegenerateCriterion)?;
    Ok(CriterionReport {
        sup_ratio: witness.ratio,
        bounded: witness.ratio <= UNBOUNDED_RATIO,
        witness,
        curve_rows,
        evaluated,
    })
}

/// Largest sampled difference quotient `|r_t(p) − r_t(q)| / |p − q|` over
/// `pairs` close pairs in the cell, with offsets of size `radius`.
pub fn sampled_lipschitz(r: &Retraction, cell: &CellTower, t: f64, pairs: usize, radius: f64, seed: u64, exec: Exec) -> Result<f64, LiftError> {
    let parts = exec.map_slice(&chunks(pairs, CHUNK), |&(start, len)| -> Result<f64, LiftError> {
        let mut rng = chunk_rng(seed, (start / CHUNK) as u64);
        let mut best = 0.0f64;
        for _ in 0..len {
            let p = cell.sample(&mut rng, 0.0)?;
            let dir = crate::random::unit_vector(&mut rng, p.len());
            let q: Vec<f64> = p.iter().zip(&dir).map(|(a, d)| a + radius * d).collect();
            if !cell.contains(&q, 0.0)? {
                continue;
            }
            let (rp, rq) = match (r.eval(&p, t), r.eval(&q, t)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(LiftError::DegenerateFiber { .. }), _) | (_, Err(LiftError::DegenerateFiber { .. })) => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            let num = rp.iter().zip(&rq).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            best = best.max(num / radius);
        }
        Ok(best)
    });
    parts.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}
