//! Pointwise comass of a form.

use rand::Rng;

use super::{subset_rank, subsets, FormError, NumericForm, PolyForm};
use crate::random::orthonormal_frame;

pub const DEFAULT_FRAME_BUDGET: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    /// `true` when `value` is the comass itself; otherwise it is a lower
    /// bound from sampled frames.
    pub exact: bool,
    /// Number of random frames evaluated.
    pub frames: usize,
}

/// Comass of a constant-coefficient `k`-form on ℝⁿ, coefficients in
/// lexicographic subset order.
///
/// Exact for `k ∈ {0, 1, n − 1, n}` (every form of degree `n − 1` is
/// decomposable, so its comass is the Euclidean norm as for `k = 1`).
/// Otherwise the maximum of `|ω(v₁, …, v_k)|` over coordinate frames and
/// `budget` random orthonormal frames.
pub fn comass<R: Rng + ?Sized>(coeffs: &[f64], n: usize, k: usize, budget: usize, rng: &mut R) -> NormEstimate {
    assert_eq!(coeffs.len(), super::binomial(n, k), "coefficient table size");
    let euclid = || coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if k == 0 || k == n {
        return NormEstimate {
            value: coeffs.first().map(|c| c.abs()).unwrap_or(0.0),
            exact: true,
            frames: 0,
        };
    }
    if k == 1 || k + 1 == n {
        return NormEstimate {
            value: euclid(),
            exact: true,
            frames: 0,
        };
    }
    let sets = subsets(n, k);
    let mut best = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for _ in 0..budget {
        let frame = orthonormal_frame(rng, n, k);
        let mut v = 0.0;
        for (set, c) in sets.iter().zip(coeffs) {
            if *c == 0.0 {
                continue;
            }
            v += c * minor(&frame, set);
        }
        best = best.max(v.abs());
    }
    NormEstimate {
        value: best,
        exact: false,
        frames: budget,
    }
}

// determinant of the k×k matrix (frame[a][set[b]])
pub(crate) fn minor(frame: &[Vec<f64>], set: &[usize]) -> f64 {
    let k = set.len();
    let mut m: Vec<Vec<f64>> = frame.iter().map(|v| set.iter().map(|&i| v[i]).collect()).collect();
    let mut det = 1.0;
    for c in 0..k {
        let p = (c..k)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..k {
            let f = m[r][c] / m[c][c];
            for j in c..k {
                m[r][j] -= f * m[c][j];
            }
        }
    }
    det
}

pub enum AnyForm<'a> {
    Poly(&'a PolyForm),
    Numeric(&'a NumericForm),
}

impl<'a> From<&'a PolyForm> for AnyForm<'a> {
    fn from(w: &'a PolyForm) -> Self {
        AnyForm::Poly(w)
    }
}

impl<'a> From<&'a NumericForm> for AnyForm<'a> {
    fn from(w: &'a NumericForm) -> Self {
        AnyForm::Numeric(w)
    }
}

/// Comass of a form at the point `x`.
pub fn pointwise_norm<'a, R: Rng + ?Sized>(
    form: impl Into<AnyForm<'a>>,
    x: &[f64],
    budget: usize,
    rng: &mut R,
) -> Result<NormEstimate, FormError> {
    let (coeffs, n, k) = match form.into() {
        AnyForm::Poly(w) => {
            if x.len() != w.n_vars() {
                return Err(FormError::DimensionMismatch {
                    expected: w.n_vars(),
                    found: x.len(),
                });
            }
            (w.eval(x), w.n_vars(), w.degree())
        }
        AnyForm::Numeric(w) => (w.eval(x)?, w.n(), w.degree()),
    };
    Ok(comass(&coeffs, n, k, budget, rng))
}

/// Coefficient of `dx_I` in a lexicographic coefficient table.
pub fn coefficient(coeffs: &[f64], n: usize, set: &[usize]) -> f64 {
    coeffs[subset_rank(n, set)]
}
