//! Globally adaptive Gauss-Kronrod (7, 15) quadrature for vector-valued
//! integrands.

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of subintervals kept before giving up.
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QuadError<E> {
    #[error("integrand evaluation failed: {0}")]
    Eval(E),
    #[error("tolerance not reached within {intervals} subintervals (error estimate {error:e})")]
    Budget { error: f64, intervals: usize, value: Vec<f64> },
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<E, F>(f: &mut F, a: f64, b: f64) -> Result<Piece, E>
where
    F: FnMut(f64) -> Result<Vec<f64>, E>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let center = f(c)?;
    let dim = center.len();
    let mut kron: Vec<f64> = center.iter().map(|v| v * WGK[7]).collect();
    let mut gauss: Vec<f64> = center.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        for i in 0..dim {
            let s = f1[i] + f2[i];
            kron[i] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let mut error: f64 = 0.0;
    for i in 0..dim {
        kron[i] *= h;
        gauss[i] *= h;
        error = error.max((kron[i] - gauss[i]).abs());
    }
    Ok(Piece {
        a,
        b,
        value: kron,
        error,
    })
}

/// Integrates a vector-valued function over `[a, b]`.
pub fn integrate_vec<E, F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError<E>>
where
    F: FnMut(f64) -> Result<Vec<f64>, E>,
{
    let first = gk15(&mut f, a, b).map_err(QuadError::Eval)?;
    let dim = first.value.len();
    let mut total = first.value.clone();
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if total_err <= cfg.abs_tol.max(cfg.rel_tol * scale) {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(QuadError::Budget {
                error: total_err,
                intervals: heap.len(),
                value: total,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            return Err(QuadError::Budget {
                error: total_err,
                intervals: heap.len(),
                value: total,
            });
        }
        let left = gk15(&mut f, worst.a, mid).map_err(QuadError::Eval)?;
        let right = gk15(&mut f, mid, worst.b).map_err(QuadError::Eval)?;
        for i in 0..dim {
            total[i] += left.value[i] + right.value[i] - worst.value[i];
        }
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // recompute the sum from the pieces to shed accumulated rounding
    let mut value = vec![0.0; dim];
    let mut error = 0.0;
    let intervals = heap.len();
    for p in heap {
        for i in 0..dim {
            value[i] += p.value[i];
        }
        error += p.error;
    }
    Ok(QuadResult {
        value,
        error,
        intervals,
    })
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<(f64, f64), QuadError<std::convert::Infallible>>
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_vec(|x| Ok(vec![f(x)]), a, b, cfg)?;
    Ok((r.value[0], r.error))
}
