//! Multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::FormError;

pub type Q = BigRational;

/// A polynomial in `n_vars` variables. Terms are keyed by exponent vectors
/// in lexicographic order; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        Polynomial {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: Q) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(vec![0; n_vars], c);
        p
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, Q::one())
    }

    /// The coordinate function `x_i` (0-based).
    pub fn var(n_vars: usize, i: usize) -> Self {
        assert!(i < n_vars, "variable index out of range");
        let mut e = vec![0; n_vars];
        e[i] = 1;
        Self::monomial(e, Q::one())
    }

    pub fn monomial(exps: Vec<u32>, c: Q) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing
    /// repeated exponents.
    pub fn from_terms<I>(n_vars: usize, terms: I) -> Result<Self, FormError>
    where
        I: IntoIterator<Item = (Vec<u32>, Q)>,
    {
        let mut p = Self::zero(n_vars);
        for (e, c) in terms {
            if e.len() != n_vars {
                return Err(FormError::DimensionMismatch {
                    expected: n_vars,
                    found: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// The constant term.
    pub fn constant_term(&self) -> Q {
        self.terms
            .get(&vec![0; self.n_vars])
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    /// Returns the value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&v| v == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.n_vars, other.n_vars, "polynomial variable count mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.n_vars);
        }
        Polynomial {
            n_vars: self.n_vars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let mut out = Self::zero(self.n_vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.n_vars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * Q::from_integer(BigInt::from(e[i])));
        }
        out
    }

    /// Substitutes polynomial `subs[i]` for variable `i`. All substituted
    /// polynomials must share a common variable count, which becomes the
    /// variable count of the result.
    pub fn substitute(&self, subs: &[Polynomial]) -> Self {
        assert_eq!(subs.len(), self.n_vars, "substitution arity mismatch");
        let target = subs.first().map(|p| p.n_vars).unwrap_or(0);
        let mut out = Self::zero(target);
        // cache powers of each substituted polynomial
        let mut powers: Vec<Vec<Polynomial>> = subs.iter().map(|s| vec![Self::one(s.n_vars)]).collect();
        for (e, c) in &self.terms {
            let mut term = Self::constant(target, c.clone());
            for (i, &k) in e.iter().enumerate() {
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap().mul(&subs[i]);
                    powers[i].push(next);
                }
                if k > 0 {
                    term = term.mul(&powers[i][k as usize]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Appends `extra` new variables (with exponent 0) after the existing ones.
    pub fn extend_vars(&self, extra: usize) -> Self {
        Polynomial {
            n_vars: self.n_vars + extra,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e2 = e.clone();
                    e2.resize(self.n_vars + extra, 0);
                    (e2, c.clone())
                })
                .collect(),
        }
    }

    /// Integrates the last variable over `[lo, 1]`, removing it.
    pub fn integrate_last(&self, lo: &Q) -> Self {
        assert!(self.n_vars >= 1);
        let n = self.n_vars - 1;
        let mut out = Self::zero(n);
        for (e, c) in &self.terms {
            let k = e[n] + 1;
            let kq = Q::from_integer(BigInt::from(k));
            // ∫_lo^1 t^{k-1} dt = (1 - lo^k)/k
            let val = (Q::one() - pow_q(lo, k)) / kq;
            out.add_term(e[..n].to_vec(), c * val);
        }
        out
    }

    /// Sets the last variable to `value`, removing it.
    pub fn eval_last(&self, value: &Q) -> Self {
        assert!(self.n_vars >= 1);
        let n = self.n_vars - 1;
        let mut out = Self::zero(n);
        for (e, c) in &self.terms {
            out.add_term(e[..n].to_vec(), c * pow_q(value, e[n]));
        }
        out
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, x: &[Q]) -> Q {
        assert_eq!(x.len(), self.n_vars);
        let mut s = Q::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    m *= pow_q(xi, k);
                }
            }
            s += m;
        }
        s
    }

    /// Floating-point evaluation.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_vars);
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut m = q_to_f64(c);
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    m *= xi.powi(k as i32);
                }
            }
            s += m;
        }
        s
    }
}

pub fn pow_q(x: &Q, k: u32) -> Q {
    let mut out = Q::one();
    for _ in 0..k {
        out *= x;
    }
    out
}

pub fn q_to_f64(c: &Q) -> f64 {
    match (c.numer().to_f64(), c.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // very large numerators/denominators: scale down by shifting
            let bits = c.numer().bits().max(c.denom().bits()) as i64 - 900;
            let shift = bits.max(0) as usize;
            let n = (c.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (c.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            n / d
        }
    }
}

/// Best rational approximation of a finite float (exact binary expansion).
pub fn f64_to_q(x: f64) -> Option<Q> {
    Q::from_float(x)
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let a = c.abs();
            let is_const = e.iter().all(|&k| k == 0);
            if !a.is_one() || is_const {
                write!(f, "{a}")?;
                if !is_const {
                    write!(f, "*")?;
                }
            }
            let mut firstvar = true;
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                if !firstvar {
                    write!(f, "*")?;
                }
                firstvar = false;
                write!(f, "x{i}")?;
                if k > 1 {
                    write!(f, "^{k}")?;
                }
            }
        }
        Ok(())
    }
}
