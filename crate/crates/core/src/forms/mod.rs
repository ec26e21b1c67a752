//! Exterior calculus on ℝⁿ and on ℝⁿ × I.
//!
//! [`PolyForm`] is exact: coefficients are polynomials over ℚ, so identities
//! such as `d∘d = 0` or the truncated homotopy formula can be checked with
//! zero tolerance. [`NumericForm`] covers everything else through a pointwise
//! evaluator.
//!
//! Index sets are 0-based throughout. On ℝⁿ × I the parameter `t` is the last
//! variable and `dt` carries index `n`.

pub mod norm;
pub mod numeric;
pub mod path;
pub mod poly;
pub mod poly_form;
pub mod sample;

pub use norm::{comass, pointwise_norm, NormEstimate, DEFAULT_FRAME_BUDGET};
pub use numeric::{Evaluator, NumericForm};
pub use path::{line_integral, Path, PathPiece};
pub use poly::Polynomial;
pub use poly_form::{PolyForm, PolyMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameter flag mismatch between operands")]
    ParameterMismatch,
    #[error("degree {degree} is invalid here: {reason}")]
    InvalidDegree { degree: usize, reason: String },
    #[error("index set {0:?} is not a strictly increasing subset of the coordinates")]
    BadIndexSet(Vec<usize>),
    #[error("form is not closed")]
    NotClosed,
    #[error("truncation parameter must lie in [0, 1), got {0}")]
    BadEpsilon(String),
    #[error("point {0:?} lies outside the domain of the form")]
    OutsideDomain(Vec<f64>),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("malformed form data: {0}")]
    Malformed(String),
}

/// All strictly increasing `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Position of `set` in the lexicographic list [`subsets`]`(n, set.len())`.
pub fn subset_rank(n: usize, set: &[usize]) -> usize {
    let k = set.len();
    let mut rank = 0;
    let mut prev: usize = 0;
    for (pos, &v) in set.iter().enumerate() {
        let start = if pos == 0 { 0 } else { prev + 1 };
        for skipped in start..v {
            rank += binomial(n - skipped - 1, k - pos - 1);
        }
        prev = v;
    }
    rank
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Sign of the permutation sorting `v` (0 if `v` has a repeated entry).
pub fn sort_sign(v: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] == v[j] {
                return 0;
            }
            if v[i] > v[j] {
                sign = -sign;
            }
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_and_ranks_agree() {
        for n in 0..6 {
            for k in 0..=n {
                let s = subsets(n, k);
                assert_eq!(s.len(), binomial(n, k));
                for (i, set) in s.iter().enumerate() {
                    assert_eq!(subset_rank(n, set), i);
                }
            }
        }
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(sort_sign(&[0, 1, 2]), 1);
        assert_eq!(sort_sign(&[1, 0, 2]), -1);
        assert_eq!(sort_sign(&[2, 0, 1]), 1);
        assert_eq!(sort_sign(&[1, 1]), 0);
    }
}
