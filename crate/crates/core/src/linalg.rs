//! Exact rational linear algebra (row reduction, kernels, certified solves)
//! and a small least-squares line fit in floating point.

use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;
pub type QMatrix = Vec<Vec<Q>>;

pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Result of Gauss-Jordan elimination `E·A = R`.
#[derive(Clone, Debug)]
pub struct Elimination {
    pub rows: usize,
    pub cols: usize,
    /// Reduced row echelon form of `A`.
    pub reduced: QMatrix,
    /// Pivot column of each of the first `pivots.len()` rows of `reduced`.
    pub pivots: Vec<usize>,
    /// The accumulated row operations, a `rows × rows` invertible matrix.
    pub transform: QMatrix,
}

impl Elimination {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Solves `A x = b`. On success free variables are zero. On failure the
    /// returned row vector `y` satisfies `yᵀA = 0` and `yᵀb ≠ 0`.
    pub fn solve(&self, b: &[Q]) -> Result<Vec<Q>, Vec<Q>> {
        assert_eq!(b.len(), self.rows);
        let eb: Vec<Q> = self
            .transform
            .iter()
            .map(|row| dot(row, b))
            .collect();
        for (i, v) in eb.iter().enumerate().skip(self.rank()) {
            if !v.is_zero() {
                return Err(self.transform[i].clone());
            }
        }
        let mut x = vec![Q::zero(); self.cols];
        for (r, &c) in self.pivots.iter().enumerate() {
            x[c] = eb[r].clone();
        }
        Ok(x)
    }

    /// Basis of the left null space `{y : yᵀA = 0}`.
    pub fn left_null_space(&self) -> Vec<Vec<Q>> {
        self.transform[self.rank()..].to_vec()
    }

    /// Basis of the kernel `{x : A x = 0}`, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<Q>> {
        let mut is_pivot = vec![false; self.cols];
        for &c in &self.pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![Q::zero(); self.cols];
            v[free] = Q::one();
            for (r, &c) in self.pivots.iter().enumerate() {
                v[c] = -self.reduced[r][free].clone();
            }
            basis.push(v);
        }
        basis
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    let mut s = Q::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

/// Gauss-Jordan elimination of a `rows × cols` matrix.
pub fn eliminate(a: &QMatrix, cols: usize) -> Elimination {
    let rows = a.len();
    let mut m: QMatrix = a.clone();
    let mut e: QMatrix = (0..rows)
        .map(|i| {
            let mut r = vec![Q::zero(); rows];
            r[i] = Q::one();
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        e.swap(r, p);
        let inv = m[r][c].recip();
        scale_row(&mut m[r], &inv);
        scale_row(&mut e[r], &inv);
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let (src_m, src_e) = (m[r].clone(), e[r].clone());
                axpy(&mut m[i], &f, &src_m);
                axpy(&mut e[i], &f, &src_e);
            }
        }
        pivots.push(c);
        r += 1;
    }
    Elimination {
        rows,
        cols,
        reduced: m,
        pivots,
        transform: e,
    }
}

fn scale_row(row: &mut [Q], f: &Q) {
    for v in row.iter_mut() {
        if !v.is_zero() {
            *v *= f;
        }
    }
}

/// `row -= f * src`
fn axpy(row: &mut [Q], f: &Q, src: &[Q]) {
    for (v, s) in row.iter_mut().zip(src) {
        if !s.is_zero() {
            *v -= f * s;
        }
    }
}

pub fn rank(a: &QMatrix, cols: usize) -> usize {
    if a.is_empty() || cols == 0 {
        return 0;
    }
    eliminate(a, cols).rank()
}

/// Scales a rational vector to a primitive integer vector whose first nonzero
/// entry is positive.
pub fn primitive_integer(v: &[Q]) -> Vec<Q> {
    use num_integer::Integer;
    let mut lcm = num_bigint::BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<num_bigint::BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = num_bigint::BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return v.to_vec();
    }
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(x) if x < &num_bigint::BigInt::zero() => -num_bigint::BigInt::one(),
        _ => num_bigint::BigInt::one(),
    };
    ints.into_iter().map(|x| Q::from_integer(x * &sign / &g)).collect()
}

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - slope * x - intercept;
            r * r
        })
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[i64]]) -> QMatrix {
        rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()
    }

    #[test]
    fn rank_and_kernel() {
        let a = mat(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        let el = eliminate(&a, 3);
        assert_eq!(el.rank(), 2);
        let k = el.kernel();
        assert_eq!(k.len(), 1);
        for row in &a {
            assert!(dot(row, &k[0]).is_zero());
        }
    }

    #[test]
    fn certificate_on_inconsistent_system() {
        let a = mat(&[&[1, 0], &[1, 0]]);
        let el = eliminate(&a, 2);
        let y = el.solve(&[q(1), q(2)]).unwrap_err();
        let ya: Vec<Q> = (0..2).map(|c| y[0].clone() * &a[0][c] + y[1].clone() * &a[1][c]).collect();
        assert!(ya.iter().all(|v| v.is_zero()));
        assert!(!dot(&y, &[q(1), q(2)]).is_zero());
        assert_eq!(el.solve(&[q(3), q(3)]).unwrap(), vec![q(3), q(0)]);
    }

    #[test]
    fn primitive_scaling() {
        let v = vec![q_frac(-1, 2), q_frac(1, 3), q(0)];
        assert_eq!(primitive_integer(&v), vec![q(3), q(-2), q(0)]);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }
}
