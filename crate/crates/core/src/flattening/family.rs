use serde::{Deserialize, Serialize};

use super::{dot, norm, FlattenError};
use crate::exec::{chunks, Exec};
use crate::expr::Expr;
use crate::lifts::{FunctionDescriptor, LipschitzCheck};
use crate::random::{chunk_rng, in_box, CHUNK};

/// One entry of the family JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub lambda: Vec<f64>,
    /// `H_k` as a graph relative to `λ_k`.
    pub zeta: Expr,
    /// `H_{k+1}` as a graph relative to `λ_k`; absent on the last stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_prime: Option<Expr>,
    /// Declared Lipschitz constant of both `zeta` and `zeta_prime`.
    #[serde(rename = "L")]
    pub lipschitz: f64,
}

/// Sampling controls shared by the family and map checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Samples are drawn from `[−radius, radius]^{n+1}`.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_samples() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-9
}

fn default_radius() -> f64 {
    1.0
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            samples: default_samples(),
            seed: 0,
            tol: default_tol(),
            radius: default_radius(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub lambda: Vec<f64>,
    /// Orthonormal basis of `N_λ`, first vector along `e_{1,λ}`.
    pub basis: Vec<Vec<f64>>,
    pub zeta: FunctionDescriptor,
    pub zeta_prime: Option<FunctionDescriptor>,
}

impl Stage {
    /// Coordinates of `π_λ(q)` in the basis of `N_λ`.
    pub fn coords(&self, q: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| dot(b, q)).collect()
    }

    pub fn height(&self, q: &[f64]) -> f64 {
        dot(&self.lambda, q)
    }

    /// The point with `N_λ` coordinates `x` and height `h`.
    pub fn point(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut p: Vec<f64> = self.lambda.iter().map(|l| h * l).collect();
        for (xi, b) in x.iter().zip(&self.basis) {
            p.iter_mut().zip(b).for_each(|(a, c)| *a += xi * c);
        }
        p
    }

    /// `π_H(q)`: the point of `H = graph(ζ)` over `π_λ(q)`.
    pub fn project(&self, q: &[f64]) -> Result<Vec<f64>, FlattenError> {
        let x = self.coords(q);
        let z = self.zeta.eval(&x)?;
        Ok(self.point(&x, z))
    }
}

/// Gram-Schmidt of `e_{j,λ} = e_j − (λ_j/λ_{n+1}) e_{n+1}`, `j = 1..n`.
pub(crate) fn normal_basis(lambda: &[f64]) -> Vec<Vec<f64>> {
    let n1 = lambda.len();
    let last = lambda[n1 - 1];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n1 - 1);
    for j in 0..n1 - 1 {
        let mut v = vec![0.0; n1];
        v[j] = 1.0;
        v[n1 - 1] = -lambda[j] / last;
        for b in &basis {
            let d = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= d * c);
        }
        let l = norm(&v);
        v.iter_mut().for_each(|a| *a /= l);
        basis.push(v);
    }
    basis
}

/// Hypersurfaces `H_1, …, H_b`, `H_k` a graph relative to `λ_k`, with
/// `H_{k+1}` also given as a graph above `H_k` relative to `λ_k`.
#[derive(Clone, Debug)]
pub struct RegularFamily {
    pub stages: Vec<Stage>,
    pub specs: Vec<StageSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleCheck {
    pub samples: usize,
    pub violations: usize,
    pub witness: Option<Vec<f64>>,
}

impl SampleCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyReport {
    /// `1 − min_k λ_k·e_{n+1}`.
    pub tilt_eps: f64,
    /// `ζ_k ≤ ζ'_k` on samples of `N_{λ_k}`.
    pub ordering: SampleCheck,
    /// `E(H_{k+1}; λ_k) = E(H_{k+1}; λ_{k+1})` on samples, away from the
    /// boundary band.
    pub regions: SampleCheck,
    /// `(stage, "zeta" | "zeta_prime", check)`.
    pub lipschitz: Vec<(usize, String, LipschitzCheck)>,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.ordering.passed() && self.regions.passed() && self.lipschitz.iter().all(|(_, _, c)| c.holds())
    }
}

impl RegularFamily {
    pub fn new(specs: Vec<StageSpec>) -> Result<Self, FlattenError> {
        let first = specs.first().ok_or_else(|| FlattenError::Family("no stages".into()))?;
        let n1 = first.lambda.len();
        if n1 < 2 {
            return Err(FlattenError::Family("directions need at least two components".into()));
        }
        let b = specs.len();
        let mut stages = Vec::with_capacity(b);
        for (k, s) in specs.iter().enumerate() {
            if s.lambda.len() != n1 {
                return Err(FlattenError::Family(format!("stage {k}: direction of length {}, expected {n1}", s.lambda.len())));
            }
            if (norm(&s.lambda) - 1.0).abs() > 1e-12 {
                return Err(FlattenError::NotUnit(s.lambda.clone()));
            }
            let last = s.lambda[n1 - 1];
            if !(last > 0.0) {
                return Err(FlattenError::NotTilted(last));
            }
            if !(s.lipschitz >= 0.0) {
                return Err(FlattenError::Family(format!("stage {k}: negative Lipschitz constant")));
            }
            let check = |e: &Expr| -> Result<FunctionDescriptor, FlattenError> {
                if e.uses_t() || e.n_vars() > n1 - 1 {
                    return Err(FlattenError::Family(format!("stage {k}: `{}` must be a function of x1..x{}", e.source(), n1 - 1)));
                }
                Ok(FunctionDescriptor {
                    expr: e.clone(),
                    lipschitz: s.lipschitz,
                })
            };
            let zeta_prime = match (&s.zeta_prime, k + 1 < b) {
                (Some(e), true) => Some(check(e)?),
                (None, false) => None,
                (None, true) => return Err(FlattenError::Family(format!("stage {k}: zeta_prime missing"))),
                (Some(_), false) => return Err(FlattenError::Family("the last stage has no zeta_prime".into())),
            };
            stages.push(Stage {
                lambda: s.lambda.clone(),
                basis: normal_basis(&s.lambda),
                zeta: check(&s.zeta)?,
                zeta_prime,
            });
        }
        Ok(RegularFamily { stages, specs })
    }

    pub fn from_json(s: &str) -> Result<Self, FlattenError> {
        let specs: Vec<StageSpec> = serde_json::from_str(s).map_err(|e| FlattenError::Family(e.to_string()))?;
        RegularFamily::new(specs)
    }

    /// Ambient dimension `n + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.stages[0].lambda.len()
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn tilt_eps(&self) -> f64 {
        let n1 = self.ambient_dim();
        1.0 - self.stages.iter().map(|s| s.lambda[n1 - 1]).fold(f64::INFINITY, f64::min)
    }

    /// Ordering, region agreement and declared Lipschitz constants on
    /// samples.
    pub fn check(&self, spec: &VerifySpec, exec: Exec) -> Result<FamilyReport, FlattenError> {
        let n1 = self.ambient_dim();
        let n = n1 - 1;
        let lo = vec![-spec.radius; n1];
        let hi = vec![spec.radius; n1];
        let parts = exec.map_slice(&chunks(spec.samples, CHUNK), |&(start, len)| -> Result<[(usize, Option<Vec<f64>>); 2], FlattenError> {
            let mut rng = chunk_rng(spec.seed, (start / CHUNK) as u64);
            let mut out = [(0, None), (0, None)];
            for _ in 0..len {
                let q = in_box(&mut rng, &lo, &hi);
                for (k, s) in self.stages.iter().enumerate() {
                    let Some(zp) = &s.zeta_prime else { continue };
                    let x = s.coords(&q);
                    let (z, z2) = (s.zeta.eval(&x)?, zp.eval(&x)?);
                    if z > z2 + spec.tol {
                        out[0].0 += 1;
                        out[0].1.get_or_insert_with(|| q.clone());
                    }
                    let next = &self.stages[k + 1];
                    let a = s.height(&q) - z2;
                    let b = next.height(&q) - next.zeta.eval(&next.coords(&q))?;
                    if a.abs() > spec.tol && b.abs() > spec.tol && (a <= 0.0) != (b <= 0.0) {
                        out[1].0 += 1;
                        out[1].1.get_or_insert_with(|| q.clone());
                    }
                }
            }
            Ok(out)
        });
        let per_stage = (self.len() - 1) * spec.samples;
        let mut ordering = SampleCheck {
            samples: per_stage,
            violations: 0,
            witness: None,
        };
        let mut regions = ordering.clone();
        for p in parts {
            let [o, r] = p?;
            ordering.violations += o.0;
            regions.violations += r.0;
            if ordering.witness.is_none() {
                ordering.witness = o.1;
            }
            if regions.witness.is_none() {
                regions.witness = r.1;
            }
        }
        let xlo = vec![-spec.radius; n];
        let xhi = vec![spec.radius; n];
        let mut lipschitz = Vec::new();
        for (k, s) in self.stages.iter().enumerate() {
            lipschitz.push((k, "zeta".to_string(), s.zeta.verify(&xlo, &xhi, spec.samples, spec.seed ^ (2 * k as u64 + 1), exec)?));
            if let Some(zp) = &s.zeta_prime {
                lipschitz.push((k, "zeta_prime".to_string(), zp.verify(&xlo, &xhi, spec.samples, spec.seed ^ (2 * k as u64 + 2), exec)?));
            }
        }
        Ok(FamilyReport {
            tilt_eps: self.tilt_eps(),
            ordering,
            regions,
            lipschitz,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lambda: Vec<f64>, zeta: &str, zeta_prime: Option<&str>, l: f64) -> StageSpec {
        StageSpec {
            lambda,
            zeta: Expr::parse(zeta).unwrap(),
            zeta_prime: zeta_prime.map(|s| Expr::parse(s).unwrap()),
            lipschitz: l,
        }
    }

    #[test]
    fn basis_is_orthonormal_and_normal() {
        let lam = vec![0.1, 0.2, (1.0f64 - 0.05).sqrt()];
        let b = normal_basis(&lam);
        for (i, u) in b.iter().enumerate() {
            assert!(dot(u, &lam).abs() < 1e-15);
            for (j, w) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(u, w) - want).abs() < 1e-15);
            }
        }
        // first vector is along e_{1,λ}
        assert!((b[0][1]).abs() < 1e-15 && b[0][0] > 0.0);
    }

    #[test]
    fn validation() {
        assert!(RegularFamily::new(vec![]).is_err());
        assert!(RegularFamily::new(vec![spec(vec![0.0, 1.0], "0", Some("1"), 0.0)]).is_err());
        assert!(RegularFamily::new(vec![spec(vec![0.0, 2.0], "0", None, 0.0)]).is_err());
        assert!(RegularFamily::new(vec![spec(vec![0.0, -1.0], "0", None, 0.0)]).is_err());
        assert!(RegularFamily::new(vec![spec(vec![0.0, 1.0], "x2", None, 1.0)]).is_err());
        let f = RegularFamily::from_json(r#"[{"lambda":[0,0,1],"zeta":"0","zeta_prime":"1","L":0},{"lambda":[0,0,1],"zeta":"1","L":0}]"#).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.tilt_eps(), 0.0);
        assert!(RegularFamily::from_json(r#"[{"lambda":[0,1],"zeta":"0","L":0,"extra":1}]"#).is_err());
    }

    #[test]
    fn ordering_and_regions_detected() {
        let bad = RegularFamily::new(vec![
            spec(vec![0.0, 0.0, 1.0], "0", Some("x1"), 1.0),
            spec(vec![0.0, 0.0, 1.0], "x1", None, 1.0),
        ])
        .unwrap();
        let r = bad.check(&VerifySpec::default(), Exec::Sequential).unwrap();
        assert!(r.ordering.violations > 0 && r.regions.passed());
        let mismatch = RegularFamily::new(vec![
            spec(vec![0.0, 0.0, 1.0], "0", Some("1"), 0.0),
            spec(vec![0.0, 0.0, 1.0], "0.5", None, 0.0),
        ])
        .unwrap();
        let r = mismatch.check(&VerifySpec::default(), Exec::Parallel).unwrap();
        assert!(r.ordering.passed() && r.regions.violations > 0 && r.regions.witness.is_some());
    }
}
