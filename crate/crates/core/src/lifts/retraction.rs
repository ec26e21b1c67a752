use serde::{Deserialize, Serialize};

use super::{Level, LiftError};
use crate::expr::Expr;

/// A deformation retraction of the base box onto a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum BaseMap {
    /// `xᵢ ↦ t^{wᵢ} xᵢ` (`wᵢ > 0`).
    Diagonal(Vec<f64>),
    /// Component expressions in `x1, …, xn` and `t`.
    Custom(Vec<Expr>),
}

impl BaseMap {
    pub fn dim(&self) -> usize {
        match self {
            BaseMap::Diagonal(w) => w.len(),
            BaseMap::Custom(e) => e.len(),
        }
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<Vec<f64>, LiftError> {
        Ok(match self {
            BaseMap::Diagonal(w) => x.iter().zip(w).map(|(v, wi)| t.powf(*wi) * v).collect(),
            BaseMap::Custom(es) => es.iter().map(|e| e.eval(x, t)).collect::<Result<_, _>>()?,
        })
    }

    fn jacobian(&self, x: &[f64], t: f64) -> Result<Vec<Vec<f64>>, LiftError> {
        let n = x.len();
        Ok(match self {
            BaseMap::Diagonal(w) => (0..n)
                .map(|i| {
                    let mut row = vec![0.0; n];
                    row[i] = t.powf(w[i]);
                    row
                })
                .collect(),
            BaseMap::Custom(es) => es
                .iter()
                .map(|e| {
                    let (_, mut g) = e.gradient(x, t)?;
                    g.pop();
                    Ok(g)
                })
                .collect::<Result<_, LiftError>>()?,
        })
    }
}

/// A base retraction together with the levels it has been lifted over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Retraction {
    pub base: BaseMap,
    #[serde(default)]
    pub levels: Vec<Level>,
}

/// Tangent map of `r_t` at a point, in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    /// Lower triangular below the base block.
    pub matrix: Vec<Vec<f64>>,
    /// `det Dr'_t` of the base map.
    pub base_det: f64,
    /// `∂r_{t,j}/∂y_j` for each band level (graph levels have no fiber).
    pub fiber: Vec<f64>,
}

impl Jacobian {
    /// Determinant of the tangent map of the cell: `det Dr'_t` times the band
    /// fiber derivatives.
    pub fn det(&self) -> f64 {
        self.fiber.iter().fold(self.base_det, |d, f| d * f)
    }

    /// Largest absolute entry.
    pub fn max_norm(&self) -> f64 {
        self.matrix.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The standard lift of `r` over one more level.
pub fn standard_lift(r: &Retraction, level: Level) -> Retraction {
    let mut out = r.clone();
    out.levels.push(level);
    out
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for j in c..n {
                m[r][j] -= f * m[c][j];
            }
        }
    }
    d
}

impl Retraction {
    pub fn diagonal(weights: Vec<f64>) -> Self {
        Retraction {
            base: BaseMap::Diagonal(weights),
            levels: Vec::new(),
        }
    }

    /// Parses one expression per base coordinate.
    pub fn custom(components: &[&str]) -> Result<Self, LiftError> {
        Ok(Retraction {
            base: BaseMap::Custom(components.iter().map(|s| Expr::parse(s)).collect::<Result<_, _>>()?),
            levels: Vec::new(),
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn dim(&self) -> usize {
        self.base_dim() + self.levels.len()
    }

    fn check(&self, q: &[f64]) -> Result<(), LiftError> {
        if q.len() != self.dim() {
            return Err(LiftError::Dimension {
                expected: self.dim(),
                found: q.len(),
            });
        }
        Ok(())
    }

    /// `r_t(q)`.
    pub fn eval(&self, q: &[f64], t: f64) -> Result<Vec<f64>, LiftError> {
        self.check(q)?;
        let n0 = self.base_dim();
        let mut img = self.base.eval(&q[..n0], t)?;
        for (j, level) in self.levels.iter().enumerate() {
            let x = &q[..n0 + j];
            let y = q[n0 + j];
            let v = match level {
                Level::Graph(f) => f.eval(&img)?,
                // a fixed base point keeps its fiber point, without the
                // rounding of τ·θ₂ + (1 − τ)·θ₁
                Level::Band { .. } if img[..] == x[..] => y,
                Level::Band { lower, upper } => {
                    let tau = fiber_parameter(lower.eval(x)?, upper.eval(x)?, y, x)?;
                    let (a, b) = (lower.eval(&img)?, upper.eval(&img)?);
                    (1.0 - tau) * a + tau * b
                }
            };
            img.push(v);
        }
        Ok(img)
    }

    /// Fiber parameters `τ_j(q)` of the band levels (graph levels give `None`).
    pub fn fiber_parameters(&self, q: &[f64]) -> Result<Vec<Option<f64>>, LiftError> {
        self.check(q)?;
        let n0 = self.base_dim();
        self.levels
            .iter()
            .enumerate()
            .map(|(j, level)| {
                let x = &q[..n0 + j];
                match level {
                    Level::Graph(_) => Ok(None),
                    Level::Band { lower, upper } => fiber_parameter(lower.eval(x)?, upper.eval(x)?, q[n0 + j], x).map(Some),
                }
            })
            .collect()
    }

    /// Analytic tangent map of `r_t` at `q`, level by level via the chain
    /// rule. Fails on the non-smooth locus of an expression.
    pub fn jacobian(&self, q: &[f64], t: f64) -> Result<Jacobian, LiftError> {
        self.check(q)?;
        let n0 = self.base_dim();
        let dim = self.dim();
        let x0 = &q[..n0];
        let mut img = self.base.eval(x0, t)?;
        let base_block = self.base.jacobian(x0, t)?;
        let base_det = det(base_block.clone());
        let mut m: Vec<Vec<f64>> = base_block
            .into_iter()
            .map(|mut row| {
                row.resize(dim, 0.0);
                row
            })
            .collect();
        let mut fiber = Vec::new();
        for (j, level) in self.levels.iter().enumerate() {
            let cur = n0 + j;
            let x = &q[..cur];
            let y = q[cur];
            // chain rule through the images: Σ_i ∂θ(img)/∂img_i · ∂img_i/∂q_l
            let through = |grad: &[f64], m: &[Vec<f64>]| -> Vec<f64> {
                (0..dim).map(|l| grad.iter().enumerate().map(|(i, g)| g * m[i][l]).sum()).collect()
            };
            let (v, row) = match level {
                Level::Graph(f) => {
                    let (v, g) = f.gradient(&img)?;
                    (v, through(&g, &m))
                }
                Level::Band { lower, upper } => {
                    let (a0, ga0) = lower.gradient(x)?;
                    let (b0, gb0) = upper.gradient(x)?;
                    let w = b0 - a0;
                    let tau = fiber_parameter(a0, b0, y, x)?;
                    let (a1, ga1) = lower.gradient(&img)?;
                    let (b1, gb1) = upper.gradient(&img)?;
                    let da = through(&ga1, &m);
                    let db = through(&gb1, &m);
                    let mut row: Vec<f64> = da.iter().zip(&db).map(|(p, s)| (1.0 - tau) * p + tau * s).collect();
                    // ∂τ/∂x_l for the source coordinates, and ∂τ/∂y = 1/w
                    for l in 0..cur {
                        let dtau = (-ga0[l] * w - (y - a0) * (gb0[l] - ga0[l])) / (w * w);
                        row[l] += dtau * (b1 - a1);
                    }
                    row[cur] += (b1 - a1) / w;
                    fiber.push((b1 - a1) / w);
                    ((1.0 - tau) * a1 + tau * b1, row)
                }
            };
            img.push(v);
            m.push(row);
        }
        Ok(Jacobian { matrix: m, base_det, fiber })
    }
}

fn fiber_parameter(a: f64, b: f64, y: f64, x: &[f64]) -> Result<f64, LiftError> {
    let w = b - a;
    if !(w > 0.0) {
        return Err(LiftError::DegenerateFiber { point: x.to_vec(), width: w });
    }
    Ok((y - a) / w)
}

/// Central-difference tangent map with step `h`.
pub fn jacobian_fd(r: &Retraction, q: &[f64], t: f64, h: f64) -> Result<Vec<Vec<f64>>, LiftError> {
    let n = r.dim();
    let mut cols = Vec::with_capacity(n);
    for l in 0..n {
        let mut qp = q.to_vec();
        let mut qm = q.to_vec();
        qp[l] += h;
        qm[l] -= h;
        let (fp, fm) = (r.eval(&qp, t)?, r.eval(&qm, t)?);
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    Ok((0..n).map(|i| (0..n).map(|l| cols[l][i]).collect()).collect())
}
