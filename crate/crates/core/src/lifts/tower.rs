use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LiftError;
use crate::exec::{chunks, Exec};
use crate::expr::Expr;
use crate::random::{chunk_rng, in_box, CHUNK};

/// Relative margin by which sampled band points stay away from the bounding
/// graphs.
pub const BAND_MARGIN: f64 = 1e-6;

/// An expression in `x1, …, xn` with a declared global Lipschitz constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDescriptor {
    pub expr: Expr,
    pub lipschitz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzCheck {
    pub declared: f64,
    /// Largest sampled difference quotient.
    pub observed: f64,
    /// Pair attaining it.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub pairs: usize,
}

impl LipschitzCheck {
    pub fn holds(&self) -> bool {
        self.observed <= self.declared * (1.0 + 1e-9) + 1e-12
    }
}

impl FunctionDescriptor {
    pub fn new(expr: &str, lipschitz: f64) -> Result<Self, LiftError> {
        Ok(FunctionDescriptor {
            expr: Expr::parse(expr)?,
            lipschitz,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, LiftError> {
        Ok(self.expr.eval_x(x)?)
    }

    /// Value and gradient in the first `x.len()` coordinates.
    pub fn gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), LiftError> {
        let (v, mut g) = self.expr.gradient(x, f64::NAN)?;
        g.pop();
        Ok((v, g))
    }

    /// Samples `pairs` random pairs in the box `[lo, hi]` and compares their
    /// difference quotients with the declared constant. Half of the pairs
    /// are close (offsets of relative size `1e−3`), which is where kinks of
    /// `abs`, `min`, `max` are seen.
    pub fn verify(&self, lo: &[f64], hi: &[f64], pairs: usize, seed: u64, exec: Exec) -> Result<LipschitzCheck, LiftError> {
        let parts = exec.map_slice(&chunks(pairs, CHUNK), |&(start, len)| -> Result<(f64, Option<(Vec<f64>, Vec<f64>)>), LiftError> {
            let mut rng = chunk_rng(seed, (start / CHUNK) as u64);
            let mut best = (0.0, None);
            for i in 0..len {
                let p = in_box(&mut rng, lo, hi);
                let q: Vec<f64> = if (start + i) % 2 == 0 {
                    in_box(&mut rng, lo, hi)
                } else {
                    p.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(v, (a, b))| (v + 1e-3 * (b - a) * (2.0 * rng.random::<f64>() - 1.0)).clamp(*a, *b))
                        .collect()
                };
                let dist = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if dist == 0.0 {
                    continue;
                }
                let quot = (self.eval(&p)? - self.eval(&q)?).abs() / dist;
                if quot > best.0 {
                    best = (quot, Some((p, q)));
                }
            }
            Ok(best)
        });
        let mut out = LipschitzCheck {
            declared: self.lipschitz,
            observed: 0.0,
            witness: None,
            pairs,
        };
        for part in parts {
            let (v, w) = part?;
            if v > out.observed {
                out.observed = v;
                out.witness = w;
            }
        }
        Ok(out)
    }
}

/// One level of a cell tower over the coordinates before it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Level {
    Graph(FunctionDescriptor),
    Band { lower: FunctionDescriptor, upper: FunctionDescriptor },
}

/// A box followed by graph and band levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellTower {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub levels: Vec<Level>,
}

impl CellTower {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, LiftError> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(LiftError::Spec(format!("bad box {lo:?} × {hi:?}")));
        }
        Ok(CellTower { lo, hi, levels: Vec::new() })
    }

    pub fn with_level(mut self, level: Level) -> Self {
        self.levels.push(level);
        self
    }

    pub fn base_dim(&self) -> usize {
        self.lo.len()
    }

    pub fn dim(&self) -> usize {
        self.base_dim() + self.levels.len()
    }

    /// Dimension of the cell itself (graph levels add none).
    pub fn cell_dim(&self) -> usize {
        self.base_dim() + self.levels.iter().filter(|l| matches!(l, Level::Band { .. })).count()
    }

    /// Membership with tolerance `tol` on the box, the graphs and the bands.
    pub fn contains(&self, q: &[f64], tol: f64) -> Result<bool, LiftError> {
        if q.len() != self.dim() {
            return Err(LiftError::Dimension {
                expected: self.dim(),
                found: q.len(),
            });
        }
        let n0 = self.base_dim();
        if q[..n0].iter().zip(self.lo.iter().zip(&self.hi)).any(|(v, (a, b))| *v < a - tol || *v > b + tol) {
            return Ok(false);
        }
        for (j, level) in self.levels.iter().enumerate() {
            let x = &q[..n0 + j];
            let y = q[n0 + j];
            let ok = match level {
                Level::Graph(f) => (y - f.eval(x)?).abs() <= tol,
                Level::Band { lower, upper } => y >= lower.eval(x)? - tol && y <= upper.eval(x)? + tol,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// A random point of the cell: uniform on the box, then on each band the
    /// fiber parameter is uniform in `[BAND_MARGIN, 1 − BAND_MARGIN]`. Points
    /// whose band width is below `min_width` are rejected (up to 1000 tries).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, min_width: f64) -> Result<Vec<f64>, LiftError> {
        'draw: for _ in 0..1000 {
            let mut q = in_box(rng, &self.lo, &self.hi);
            for level in &self.levels {
                let y = match level {
                    Level::Graph(f) => f.eval(&q)?,
                    Level::Band { lower, upper } => {
                        let (a, b) = (lower.eval(&q)?, upper.eval(&q)?);
                        if b - a <= min_width.max(0.0) {
                            if b < a {
                                return Err(LiftError::BandOrder { point: q });
                            }
                            continue 'draw;
                        }
                        let u = BAND_MARGIN + (1.0 - 2.0 * BAND_MARGIN) * rng.random::<f64>();
                        a + u * (b - a)
                    }
                };
                q.push(y);
            }
            return Ok(q);
        }
        Err(LiftError::Sampling(format!("band width stayed below {min_width}")))
    }

    /// Checks `θ₁ < θ₂` on `count` box-and-fiber samples. Returns the first
    /// violation.
    pub fn check_order(&self, count: usize, seed: u64) -> Result<(), LiftError> {
        let mut rng = chunk_rng(seed, 0);
        for _ in 0..count {
            let mut q = in_box(&mut rng, &self.lo, &self.hi);
            for level in &self.levels {
                let y = match level {
                    Level::Graph(f) => f.eval(&q)?,
                    Level::Band { lower, upper } => {
                        let (a, b) = (lower.eval(&q)?, upper.eval(&q)?);
                        if b < a {
                            return Err(LiftError::BandOrder { point: q });
                        }
                        a + rng.random::<f64>() * (b - a)
                    }
                };
                q.push(y);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;

    fn example_band() -> CellTower {
        CellTower::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap().with_level(Level::Band {
            lower: FunctionDescriptor::new("0", 0.0).unwrap(),
            upper: FunctionDescriptor::new("abs(x1^2 - x2)", 3.0).unwrap(),
        })
    }

    #[test]
    fn samples_lie_in_the_cell() {
        let c = example_band();
        let mut r = rng(1);
        for _ in 0..200 {
            let q = c.sample(&mut r, 0.0).unwrap();
            assert!(c.contains(&q, 0.0).unwrap());
        }
        assert_eq!(c.dim(), 3);
        assert_eq!(c.cell_dim(), 3);
    }

    #[test]
    fn declared_lipschitz_constants() {
        let f = FunctionDescriptor::new("abs(x1^2 - x2)", 3.0).unwrap();
        let chk = f.verify(&[-1.0, -1.0], &[1.0, 1.0], 20_000, 3, Exec::Parallel).unwrap();
        assert!(chk.holds(), "{chk:?}");
        let lying = FunctionDescriptor::new("5*x1", 1.0).unwrap();
        let chk = lying.verify(&[0.0], &[1.0], 1000, 3, Exec::Sequential).unwrap();
        assert!(!chk.holds());
        assert!(chk.witness.is_some());
    }

    #[test]
    fn inverted_band_detected() {
        let c = CellTower::new(vec![0.0], vec![1.0]).unwrap().with_level(Level::Band {
            lower: FunctionDescriptor::new("x1", 1.0).unwrap(),
            upper: FunctionDescriptor::new("0.5", 0.0).unwrap(),
        });
        assert!(matches!(c.check_order(100, 0), Err(LiftError::BandOrder { .. })));
    }

    #[test]
    fn serde_shape() {
        let c = example_band();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"band\""));
        let back: CellTower = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
