use rand::Rng;
use serde::Serialize;

use super::{dot, norm, FlattenError};
use crate::exec::{chunks, Exec};
use crate::lifts::FunctionDescriptor;
use crate::random::{chunk_rng, unit_vector, CHUNK};

/// `C_n(λ, M) = {q : q·λ ≥ M|q|}`, `|λ| = 1`, `M ∈ [0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cone {
    axis: Vec<f64>,
    aperture: f64,
}

impl Cone {
    pub fn new(axis: Vec<f64>, aperture: f64) -> Result<Self, FlattenError> {
        let l = norm(&axis);
        if (l - 1.0).abs() > 1e-12 {
            return Err(FlattenError::NotUnit(axis));
        }
        if !(0.0..1.0).contains(&aperture) {
            return Err(FlattenError::Aperture(aperture));
        }
        Ok(Cone { axis, aperture })
    }

    /// Axis `e₁` in ℝⁿ.
    pub fn e1(n: usize, aperture: f64) -> Result<Self, FlattenError> {
        let mut axis = vec![0.0; n];
        axis[0] = 1.0;
        Cone::new(axis, aperture)
    }

    pub fn dim(&self) -> usize {
        self.axis.len()
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    /// `q·λ ≥ M|q|`, up to a few ulps of `|q|` so that boundary points such as
    /// `(1, 1, 0)` for `M = 1/√2` count as members. The apex is a member.
    pub fn contains(&self, q: &[f64]) -> bool {
        let n = norm(q);
        if n == 0.0 {
            return true;
        }
        dot(q, &self.axis) >= self.aperture * n - 8.0 * f64::EPSILON * n
    }

    /// A random point of the cone with `|q| ≤ 1`. One draw in four sits on
    /// the boundary, where the lemma bounds are tight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dim();
        let c = if rng.random::<f64>() < 0.25 {
            self.aperture
        } else {
            self.aperture + (1.0 - self.aperture) * rng.random::<f64>()
        };
        let s = (1.0 - c * c).max(0.0).sqrt();
        let w = if n == 1 {
            vec![0.0]
        } else {
            loop {
                let mut w = unit_vector(rng, n);
                let d = dot(&w, &self.axis);
                w.iter_mut().zip(&self.axis).for_each(|(a, b)| *a -= d * b);
                let l = norm(&w);
                if l > 1e-9 {
                    w.iter_mut().for_each(|a| *a /= l);
                    break w;
                }
            }
        };
        let r = 1.0 - rng.random::<f64>();
        self.axis.iter().zip(&w).map(|(a, b)| r * (c * a + s * b)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeCheck {
    /// Aperture of the target cone.
    pub aperture: f64,
    pub samples: usize,
    pub violations: usize,
    /// First violating point, if any.
    pub witness: Option<Vec<f64>>,
    /// `true` when the bound is not positive and nothing was checked.
    pub vacuous: bool,
}

impl ConeCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Runs `test` on `samples` points drawn from `source` and counts failures.
pub(crate) fn monte_carlo(
    source: &Cone,
    samples: usize,
    seed: u64,
    exec: Exec,
    test: impl Fn(&[f64]) -> Result<bool, FlattenError> + Sync + Send,
) -> Result<(usize, Option<Vec<f64>>), FlattenError> {
    let parts = exec.map_slice(&chunks(samples, CHUNK), |&(start, len)| -> Result<(usize, Option<Vec<f64>>), FlattenError> {
        let mut rng = chunk_rng(seed, (start / CHUNK) as u64);
        let mut bad = 0;
        let mut first = None;
        for _ in 0..len {
            let q = source.sample(&mut rng);
            if !test(&q)? {
                bad += 1;
                if first.is_none() {
                    first = Some(q);
                }
            }
        }
        Ok((bad, first))
    });
    let mut bad = 0;
    let mut first = None;
    for p in parts {
        let (b, w) = p?;
        bad += b;
        if first.is_none() {
            first = w;
        }
    }
    Ok((bad, first))
}

/// Aperture `M/(1 + L)` of a cone around the graph of an `L`-Lipschitz
/// `ξ` with `ξ(0) = 0` over `C_n(e₁, M)`, sample-checked.
pub fn graph_cone_bound(xi: &FunctionDescriptor, n: usize, m: f64, samples: usize, seed: u64, exec: Exec) -> Result<ConeCheck, FlattenError> {
    let at0 = xi.eval(&vec![0.0; n])?;
    if at0.abs() > 1e-12 {
        return Err(FlattenError::NotThroughOrigin(at0));
    }
    let source = Cone::e1(n, m)?;
    let aperture = m / (1.0 + xi.lipschitz);
    let target = Cone::e1(n + 1, aperture)?;
    let (violations, witness) = monte_carlo(&source, samples, seed, exec, |x| {
        let mut p = x.to_vec();
        p.push(xi.eval(x)?);
        Ok(target.contains(&p))
    })?;
    Ok(ConeCheck {
        aperture,
        samples,
        violations,
        witness,
        vacuous: false,
    })
}

/// `e_{1,λ} = e₁ + A e_{n+1}`, the vector of `N_λ` over `e₁`, with
/// `A = −(e₁·λ)/(e_{n+1}·λ)`.
pub fn lifted_axis(lambda: &[f64]) -> Result<(Vec<f64>, f64), FlattenError> {
    let last = *lambda.last().ok_or(FlattenError::Dimension)?;
    if !(last > 0.0) {
        return Err(FlattenError::NotTilted(last));
    }
    let a = -lambda[0] / last;
    let mut v = vec![0.0; lambda.len()];
    v[0] = 1.0;
    *v.last_mut().expect("nonempty") += a;
    Ok((v, a))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TiltedConeCheck {
    /// `A` in `v = e₁ + A e_{n+1}`.
    pub a: f64,
    pub v_norm: f64,
    /// `1 − λ·e_{n+1}`.
    pub eps: f64,
    pub check: ConeCheck,
}

/// `C_{n+1}(e₁, M) ⊂ C_{n+1}(v/|v|, M')` with
/// `M' = (M − √(2ε)/(1−ε))/|v|`, `v = e_{1,λ}`, `ε = 1 − λ·e_{n+1}`.
pub fn tilted_cone_bound(lambda: &[f64], m: f64, samples: usize, seed: u64, exec: Exec) -> Result<TiltedConeCheck, FlattenError> {
    if (norm(lambda) - 1.0).abs() > 1e-12 {
        return Err(FlattenError::NotUnit(lambda.to_vec()));
    }
    let (v, a) = lifted_axis(lambda)?;
    let eps = (1.0 - lambda[lambda.len() - 1]).max(0.0);
    let v_norm = norm(&v);
    let aperture = (m - (2.0 * eps).sqrt() / (1.0 - eps)) / v_norm;
    let source = Cone::e1(lambda.len(), m)?;
    if aperture <= 0.0 {
        return Ok(TiltedConeCheck {
            a,
            v_norm,
            eps,
            check: ConeCheck {
                aperture,
                samples: 0,
                violations: 0,
                witness: None,
                vacuous: true,
            },
        });
    }
    let axis: Vec<f64> = v.iter().map(|x| x / v_norm).collect();
    let target = Cone::new(axis, aperture.min(1.0 - f64::EPSILON))?;
    let (violations, witness) = monte_carlo(&source, samples, seed, exec, |q| Ok(target.contains(q)))?;
    Ok(TiltedConeCheck {
        a,
        v_norm,
        eps,
        check: ConeCheck {
            aperture,
            samples,
            violations,
            witness,
            vacuous: false,
        },
    })
}

/// `C(u, M) ⊂ C(v/|v|, (M − |v − u|)/|v|)` for a unit `u`; with `u = e₁` and
/// `v = e_{1,λ}` this is the inclusion before `|A|` is bounded by `ε`.
pub fn transfer_aperture(u: &[f64], v: &[f64], m: f64) -> f64 {
    let diff: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
    (m - norm(&diff)) / norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;

    #[test]
    fn membership() {
        let c = Cone::e1(2, 0.0).unwrap();
        assert!(c.contains(&[0.0, 1.0]));
        assert!(!Cone::e1(2, 0.9).unwrap().contains(&[0.0, 1.0]));
        assert!(Cone::e1(3, 0.5f64.sqrt()).unwrap().contains(&[1.0, 1.0, 0.0]));
        assert!(c.contains(&[0.0, 0.0]));
        assert!(Cone::new(vec![1.0, 1.0], 0.5).is_err());
        assert!(Cone::e1(2, 1.0).is_err());
    }

    #[test]
    fn samples_are_members() {
        let c = Cone::new(vec![0.6, 0.8, 0.0], 0.7).unwrap();
        let mut r = rng(4);
        for _ in 0..1000 {
            let q = c.sample(&mut r);
            assert!(c.contains(&q) && norm(&q) <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn graph_bounds() {
        let zero = FunctionDescriptor::new("0", 0.0).unwrap();
        let r = graph_cone_bound(&zero, 2, 0.7, 1000, 1, Exec::Sequential).unwrap();
        assert_eq!(r.aperture, 0.7);
        assert!(r.passed());
        let x2 = FunctionDescriptor::new("x2", 1.0).unwrap();
        let r = graph_cone_bound(&x2, 2, 0.8, 20_000, 1, Exec::Parallel).unwrap();
        assert!((r.aperture - 0.4).abs() < 1e-15 && r.passed());
        let lying = FunctionDescriptor::new("10*x2", 1.0).unwrap();
        let r = graph_cone_bound(&lying, 2, 0.8, 20_000, 1, Exec::Parallel).unwrap();
        assert!(r.violations > 0 && r.witness.is_some());
        let shifted = FunctionDescriptor::new("x1 + 1", 1.0).unwrap();
        assert!(matches!(graph_cone_bound(&shifted, 2, 0.5, 10, 1, Exec::Sequential), Err(FlattenError::NotThroughOrigin(_))));
    }

    #[test]
    fn tilted_bounds() {
        let r = tilted_cone_bound(&[0.0, 0.0, 1.0], 0.6, 1000, 2, Exec::Sequential).unwrap();
        assert_eq!((r.a, r.v_norm, r.eps), (0.0, 1.0, 0.0));
        assert!((r.check.aperture - 0.6).abs() < 1e-15);
        let lam = [0.1, 0.0, 0.99f64.sqrt()];
        let r = tilted_cone_bound(&lam, 0.9, 20_000, 2, Exec::Parallel).unwrap();
        assert!((r.a + 0.1 / 0.99f64.sqrt()).abs() < 1e-15);
        assert!((r.check.aperture - 0.7954).abs() < 1e-3);
        assert!(r.check.passed());
        let r = tilted_cone_bound(&lam, 0.05, 100, 2, Exec::Sequential).unwrap();
        assert!(r.check.vacuous);
    }
}
