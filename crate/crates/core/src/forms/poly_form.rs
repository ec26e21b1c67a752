//! Differential forms with exact polynomial coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{q_to_f64, Polynomial, Q};
use super::{sort_sign, subsets, FormError};

/// A `k`-form on ℝⁿ, or on ℝⁿ × I when `has_t` is set.
///
/// Coefficients are polynomials in `n` variables (`n + 1` with `t`). Zero
/// components are never stored, so structural equality is mathematical
/// equality.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PolyFormJson", into = "PolyFormJson")]
pub struct PolyForm {
    n: usize,
    k: usize,
    has_t: bool,
    components: BTreeMap<Vec<usize>, Polynomial>,
}

impl PolyForm {
    pub fn zero(n: usize, k: usize, has_t: bool) -> Self {
        PolyForm {
            n,
            k,
            has_t,
            components: BTreeMap::new(),
        }
    }

    /// A 0-form.
    pub fn function(n: usize, has_t: bool, f: Polynomial) -> Self {
        let mut w = Self::zero(n, 0, has_t);
        w.insert(vec![], f);
        w
    }

    /// The basis 1-form `dx_i` (with `i = n` meaning `dt`).
    pub fn dx(n: usize, has_t: bool, i: usize) -> Self {
        let vars = n + usize::from(has_t);
        let mut w = Self::zero(n, 1, has_t);
        w.insert(vec![i], Polynomial::one(vars));
        w
    }

    /// `dt` on ℝⁿ × I.
    pub fn dt(n: usize) -> Self {
        Self::dx(n, true, n)
    }

    /// Builds a form from `(index set, coefficient)` pairs. Index sets may be
    /// in any order; they are sorted with the permutation sign applied.
    pub fn from_components<I>(n: usize, k: usize, has_t: bool, comps: I) -> Result<Self, FormError>
    where
        I: IntoIterator<Item = (Vec<usize>, Polynomial)>,
    {
        let vars = n + usize::from(has_t);
        let max_k = vars;
        if k > max_k {
            return Err(FormError::InvalidDegree {
                degree: k,
                reason: format!("exceeds ambient dimension {max_k}"),
            });
        }
        let mut w = Self::zero(n, k, has_t);
        for (idx, p) in comps {
            if idx.len() != k || idx.iter().any(|&i| i >= vars) {
                return Err(FormError::BadIndexSet(idx));
            }
            if p.n_vars() != vars {
                return Err(FormError::DimensionMismatch {
                    expected: vars,
                    found: p.n_vars(),
                });
            }
            let s = sort_sign(&idx);
            if s == 0 {
                continue;
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            let p = if s < 0 { p.neg() } else { p };
            w.insert(sorted, p);
        }
        Ok(w)
    }

    fn insert(&mut self, idx: Vec<usize>, p: Polynomial) {
        if p.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.components.entry(idx) {
            Entry::Vacant(v) => {
                v.insert(p);
            }
            Entry::Occupied(mut o) => {
                let s = o.get().add(&p);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Spatial dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn has_t(&self) -> bool {
        self.has_t
    }

    /// Number of polynomial variables (`n`, plus one for `t`).
    pub fn n_vars(&self) -> usize {
        self.n + usize::from(self.has_t)
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Polynomial)> {
        self.components.iter()
    }

    pub fn component(&self, idx: &[usize]) -> Polynomial {
        self.components
            .get(idx)
            .cloned()
            .unwrap_or_else(|| Polynomial::zero(self.n_vars()))
    }

    fn same_space(&self, other: &Self) -> Result<(), FormError> {
        if self.n != other.n {
            return Err(FormError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        if self.has_t != other.has_t {
            return Err(FormError::ParameterMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        self.same_space(other)?;
        if self.k != other.k {
            return Err(FormError::InvalidDegree {
                degree: other.k,
                reason: format!("cannot add to a {}-form", self.k),
            });
        }
        let mut out = self.clone();
        for (i, p) in &other.components {
            out.insert(i.clone(), p.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.n, self.k, self.has_t);
        for (i, p) in &self.components {
            out.insert(i.clone(), p.scale(c));
        }
        out
    }

    /// Multiplies every coefficient by the function `f`.
    pub fn mul_function(&self, f: &Polynomial) -> Self {
        let mut out = Self::zero(self.n, self.k, self.has_t);
        for (i, p) in &self.components {
            out.insert(i.clone(), p.mul(f));
        }
        out
    }

    /// Exterior product.
    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        self.same_space(other)?;
        let k = self.k + other.k;
        if k > self.n_vars() {
            return Ok(Self::zero(self.n, k, self.has_t));
        }
        let mut out = Self::zero(self.n, k, self.has_t);
        for (i, p) in &self.components {
            for (j, r) in &other.components {
                let mut idx = i.clone();
                idx.extend_from_slice(j);
                let s = sort_sign(&idx);
                if s == 0 {
                    continue;
                }
                idx.sort_unstable();
                let prod = p.mul(r);
                out.insert(idx, if s < 0 { prod.neg() } else { prod });
            }
        }
        Ok(out)
    }

    /// Exterior derivative, including the `dt` direction when `has_t`.
    pub fn d(&self) -> Self {
        let vars = self.n_vars();
        let mut out = Self::zero(self.n, self.k + 1, self.has_t);
        for (idx, p) in &self.components {
            for j in 0..vars {
                if idx.contains(&j) {
                    continue;
                }
                let dp = p.partial(j);
                if dp.is_zero() {
                    continue;
                }
                // dx_j ∧ dx_I = (−1)^{#{i ∈ I : i < j}} dx_{sorted(I ∪ j)}
                let before = idx.iter().filter(|&&i| i < j).count();
                let mut new_idx = idx.clone();
                new_idx.insert(before, j);
                out.insert(new_idx, if before % 2 == 1 { dp.neg() } else { dp });
            }
        }
        out
    }

    pub fn is_closed(&self) -> bool {
        self.d().is_zero()
    }

    /// Pullback `φ^*ω`.
    pub fn pullback(&self, phi: &PolyMap) -> Result<Self, FormError> {
        if phi.target_dim() != self.n_vars() {
            return Err(FormError::DimensionMismatch {
                expected: self.n_vars(),
                found: phi.target_dim(),
            });
        }
        let (sn, st) = (phi.source_dim, phi.source_has_t);
        let svars = sn + usize::from(st);
        // dφ_i as 1-forms on the source
        let dphi: Vec<PolyForm> = phi
            .components
            .iter()
            .map(|c| PolyForm::function(sn, st, c.clone()).d())
            .collect();
        let mut out = Self::zero(sn, self.k, st);
        if self.k > svars {
            return Ok(out);
        }
        'terms: for (idx, p) in &self.components {
            let coeff = p.substitute(&phi.components);
            if coeff.is_zero() {
                continue;
            }
            let mut acc = PolyForm::function(sn, st, coeff);
            for &i in idx {
                acc = acc.wedge(&dphi[i])?;
                if acc.is_zero() {
                    continue 'terms;
                }
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Writes a form on ℝⁿ × I as `ω₀ + dt ∧ ω₁` with neither part containing
    /// `dt`. Returns `(ω₀, ω₁)`; `ω₁` has degree `k − 1` (and is zero when
    /// `k = 0`, in which case its degree is reported as 0).
    pub fn split_dt(&self) -> Result<(Self, Self), FormError> {
        if !self.has_t {
            return Err(FormError::ParameterMismatch);
        }
        let t_idx = self.n;
        let mut w0 = Self::zero(self.n, self.k, true);
        let mut w1 = Self::zero(self.n, self.k.saturating_sub(1), true);
        for (idx, p) in &self.components {
            if idx.last() == Some(&t_idx) {
                // f dx_{I'} ∧ dt = (−1)^{|I'|} f dt ∧ dx_{I'}
                let rest = idx[..idx.len() - 1].to_vec();
                let sign_neg = rest.len() % 2 == 1;
                w1.insert(rest, if sign_neg { p.neg() } else { p.clone() });
            } else {
                w0.insert(idx.clone(), p.clone());
            }
        }
        Ok((w0, w1))
    }

    /// Inverse of [`split_dt`](Self::split_dt): returns `ω₀ + dt ∧ ω₁`.
    pub fn recombine(w0: &Self, w1: &Self) -> Result<Self, FormError> {
        if !w0.has_t || !w1.has_t {
            return Err(FormError::ParameterMismatch);
        }
        if w1.is_zero() {
            return Ok(w0.clone());
        }
        let dt = Self::dt(w0.n);
        w0.add(&dt.wedge(w1)?)
    }

    /// Regards a form on ℝⁿ as a form on ℝⁿ × I that does not depend on `t`.
    pub fn with_t(&self) -> Self {
        if self.has_t {
            return self.clone();
        }
        let mut out = Self::zero(self.n, self.k, true);
        for (i, p) in &self.components {
            out.insert(i.clone(), p.extend_vars(1));
        }
        out
    }

    /// Restricts a form on ℝⁿ × I to the slice `t = value`, dropping all
    /// `dt` components.
    pub fn at_t(&self, value: &Q) -> Result<Self, FormError> {
        if !self.has_t {
            return Err(FormError::ParameterMismatch);
        }
        let mut out = Self::zero(self.n, self.k, false);
        for (idx, p) in &self.components {
            if idx.last() == Some(&self.n) {
                continue;
            }
            out.insert(idx.clone(), p.eval_last(value));
        }
        Ok(out)
    }

    /// The radial homotopy operator
    ///
    /// `K_ε ω = ∫_ε^1 ω₁(x, t) dt` where `r_t^*ω = ω₀ + dt ∧ ω₁` and
    /// `r_t(x) = b + t(x − b)`.
    ///
    /// It satisfies `d K_ε ω + K_ε dω = ω − r_ε^*ω` exactly. For a 0-form the
    /// operator is zero; since there are no (−1)-forms this returns
    /// [`FormError::InvalidDegree`].
    pub fn radial_homotopy(&self, base: &[Q], eps: &Q) -> Result<Self, FormError> {
        check_eps(eps)?;
        if self.has_t {
            return Err(FormError::ParameterMismatch);
        }
        if base.len() != self.n {
            return Err(FormError::DimensionMismatch {
                expected: self.n,
                found: base.len(),
            });
        }
        if self.k == 0 {
            return Err(FormError::InvalidDegree {
                degree: 0,
                reason: "the homotopy operator lowers degree".into(),
            });
        }
        let r = PolyMap::radial(base);
        let pulled = self.pullback(&r)?;
        let (_, w1) = pulled.split_dt()?;
        let mut out = Self::zero(self.n, self.k - 1, false);
        for (idx, p) in &w1.components {
            out.insert(idx.clone(), p.integrate_last(eps));
        }
        Ok(out)
    }

    /// `r_ε^*ω` for the radial contraction towards `base`.
    pub fn radial_pullback(&self, base: &[Q], eps: &Q) -> Result<Self, FormError> {
        self.pullback(&PolyMap::scaling(base, eps))
    }

    /// `d K_ε ω + K_ε dω − (ω − r_ε^*ω)`, which must vanish identically.
    /// Degree 0 and top degree are handled by dropping the terms that do not
    /// exist.
    pub fn homotopy_defect(&self, base: &[Q], eps: &Q) -> Result<Self, FormError> {
        let rhs = self.sub(&self.radial_pullback(base, eps)?)?;
        let mut lhs = Self::zero(self.n, self.k, false);
        if self.k > 0 {
            lhs = lhs.add(&self.radial_homotopy(base, eps)?.d())?;
        }
        let dw = self.d();
        if self.k < self.n && !dw.is_zero() {
            lhs = lhs.add(&dw.radial_homotopy(base, eps)?)?;
        }
        lhs.sub(&rhs)
    }

    /// Floating-point coefficient vector in lexicographic order of the
    /// `k`-subsets of the `n_vars()` coordinates.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let all = subsets(self.n_vars(), self.k);
        let mut out = vec![0.0; all.len()];
        for (idx, p) in &self.components {
            let pos = super::subset_rank(self.n_vars(), idx);
            out[pos] = p.eval(x);
        }
        out
    }

    /// Largest absolute numerator or denominator among all coefficients, in
    /// bits. Used to bound test sizes.
    pub fn max_coefficient_bits(&self) -> u64 {
        self.components
            .values()
            .flat_map(|p| p.terms().map(|(_, c)| c.numer().bits().max(c.denom().bits())))
            .max()
            .unwrap_or(0)
    }
}

pub(crate) fn check_eps(eps: &Q) -> Result<(), FormError> {
    if eps.is_negative() || *eps >= Q::one() {
        return Err(FormError::BadEpsilon(eps.to_string()));
    }
    Ok(())
}

impl fmt::Debug for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "0");
        }
        let name = |i: usize| {
            if self.has_t && i == self.n {
                "dt".to_string()
            } else {
                format!("dx{i}")
            }
        };
        let mut first = true;
        for (idx, p) in &self.components {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({p})")?;
            for &i in idx {
                write!(f, "{}{}", if i == idx[0] { " " } else { "^" }, name(i))?;
            }
        }
        Ok(())
    }
}

/// A polynomial map from ℝᵐ (or ℝᵐ × I) to ℝᵈ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMap {
    pub source_dim: usize,
    pub source_has_t: bool,
    pub components: Vec<Polynomial>,
}

impl PolyMap {
    pub fn new(source_dim: usize, source_has_t: bool, components: Vec<Polynomial>) -> Result<Self, FormError> {
        let vars = source_dim + usize::from(source_has_t);
        for c in &components {
            if c.n_vars() != vars {
                return Err(FormError::DimensionMismatch {
                    expected: vars,
                    found: c.n_vars(),
                });
            }
        }
        Ok(PolyMap {
            source_dim,
            source_has_t,
            components,
        })
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn identity(n: usize) -> Self {
        PolyMap {
            source_dim: n,
            source_has_t: false,
            components: (0..n).map(|i| Polynomial::var(n, i)).collect(),
        }
    }

    /// `r(x, t) = b + t(x − b)` as a map ℝⁿ × I → ℝⁿ.
    pub fn radial(base: &[Q]) -> Self {
        let n = base.len();
        let t = Polynomial::var(n + 1, n);
        let components = base
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let b_poly = Polynomial::constant(n + 1, b.clone());
                let x = Polynomial::var(n + 1, i);
                b_poly.add(&t.mul(&x.sub(&b_poly)))
            })
            .collect();
        PolyMap {
            source_dim: n,
            source_has_t: true,
            components,
        }
    }

    /// `x ↦ b + s(x − b)` on ℝⁿ.
    pub fn scaling(base: &[Q], s: &Q) -> Self {
        let n = base.len();
        let components = base
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let x = Polynomial::var(n, i);
                let b_poly = Polynomial::constant(n, b.clone());
                b_poly.add(&x.sub(&b_poly).scale(s))
            })
            .collect();
        PolyMap {
            source_dim: n,
            source_has_t: false,
            components,
        }
    }
}

// ---- JSON representation ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyFormJson {
    n: usize,
    k: usize,
    has_t: bool,
    components: Vec<ComponentJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentJson {
    #[serde(rename = "I")]
    index: Vec<usize>,
    poly: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    exps: Vec<u32>,
    num: serde_json::Value,
    #[serde(default = "one_value")]
    den: serde_json::Value,
}

fn one_value() -> serde_json::Value {
    serde_json::Value::from(1)
}

fn int_to_json(v: &BigInt) -> serde_json::Value {
    match v.to_i64() {
        Some(i) => serde_json::Value::from(i),
        None => serde_json::Value::from(v.to_string()),
    }
}

fn json_to_int(v: &serde_json::Value) -> Result<BigInt, FormError> {
    match v {
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| FormError::Malformed(format!("non-integer coefficient {n}"))),
        serde_json::Value::String(s) => s
            .parse::<BigInt>()
            .map_err(|_| FormError::Malformed(format!("bad integer string {s:?}"))),
        other => Err(FormError::Malformed(format!("expected integer, found {other}"))),
    }
}

impl From<PolyForm> for PolyFormJson {
    fn from(w: PolyForm) -> Self {
        PolyFormJson {
            n: w.n,
            k: w.k,
            has_t: w.has_t,
            components: w
                .components
                .iter()
                .map(|(idx, p)| ComponentJson {
                    index: idx.clone(),
                    poly: p
                        .terms()
                        .map(|(e, c)| TermJson {
                            exps: e.clone(),
                            num: int_to_json(c.numer()),
                            den: int_to_json(c.denom()),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<PolyFormJson> for PolyForm {
    type Error = FormError;

    fn try_from(j: PolyFormJson) -> Result<Self, FormError> {
        let vars = j.n + usize::from(j.has_t);
        let mut comps = Vec::new();
        for c in j.components {
            let mut terms = Vec::new();
            for t in c.poly {
                let den = json_to_int(&t.den)?;
                if den.is_zero() {
                    return Err(FormError::Malformed("zero denominator".into()));
                }
                terms.push((t.exps, Q::new(json_to_int(&t.num)?, den)));
            }
            comps.push((c.index, Polynomial::from_terms(vars, terms)?));
        }
        PolyForm::from_components(j.n, j.k, j.has_t, comps)
    }
}

/// Float view of an exact coefficient.
pub fn coeff_f64(c: &Q) -> f64 {
    q_to_f64(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{q, q_frac};

    fn var(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn wedge_is_graded_anticommutative() {
        let dx = PolyForm::dx(2, false, 0);
        let dy = PolyForm::dx(2, false, 1);
        assert_eq!(dx.wedge(&dy).unwrap(), dy.wedge(&dx).unwrap().neg());
        assert!(dx.wedge(&dx).unwrap().is_zero());
        let dz = PolyForm::dx(3, false, 2);
        let xdy = PolyForm::dx(3, false, 1).mul_function(&var(3, 0));
        let want = PolyForm::from_components(3, 2, false, vec![(vec![1, 2], var(3, 0))]).unwrap();
        assert_eq!(xdy.wedge(&dz).unwrap(), want);
    }

    #[test]
    fn derivative_examples() {
        let x = var(1, 0);
        let f = PolyForm::function(1, false, x.mul(&x));
        let want = PolyForm::dx(1, false, 0).mul_function(&x.scale(&q(2)));
        assert_eq!(f.d(), want);

        let xdy = PolyForm::dx(2, false, 1).mul_function(&var(2, 0));
        let dxdy = PolyForm::dx(2, false, 0).wedge(&PolyForm::dx(2, false, 1)).unwrap();
        assert_eq!(xdy.d(), dxdy);
    }

    #[test]
    fn pullback_of_dx_under_scaling_in_t() {
        // r(x, t) = t x on ℝ¹: r^* dx = t dx + x dt
        let r = PolyMap::radial(&[q(0)]);
        let got = PolyForm::dx(1, false, 0).pullback(&r).unwrap();
        let want = PolyForm::from_components(1, 1, true, vec![(vec![0], var(2, 1)), (vec![1], var(2, 0))]).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn split_example() {
        // t² dx∧dy + t x dt∧dy  →  (t² dx∧dy, t x dy)
        let (x, t) = (var(3, 0), var(3, 2));
        let w = PolyForm::from_components(
            2,
            2,
            true,
            vec![(vec![0, 1], t.mul(&t)), (vec![2, 1], t.mul(&x))],
        )
        .unwrap();
        let (w0, w1) = w.split_dt().unwrap();
        assert_eq!(w0, PolyForm::from_components(2, 2, true, vec![(vec![0, 1], t.mul(&t))]).unwrap());
        assert_eq!(w1, PolyForm::from_components(2, 1, true, vec![(vec![1], t.mul(&x))]).unwrap());
        assert_eq!(PolyForm::recombine(&w0, &w1).unwrap(), w);
    }

    #[test]
    fn area_form_primitive() {
        let w = PolyForm::dx(2, false, 0).wedge(&PolyForm::dx(2, false, 1)).unwrap();
        let k = w.radial_homotopy(&[q(0), q(0)], &q(0)).unwrap();
        let half = q_frac(1, 2);
        let want = PolyForm::from_components(
            2,
            1,
            false,
            vec![(vec![1], var(2, 0).scale(&half)), (vec![0], var(2, 1).scale(&-half))],
        )
        .unwrap();
        assert_eq!(k, want);
        assert_eq!(k.d(), w);
    }

    #[test]
    fn json_round_trip() {
        let x = var(3, 0);
        let w = PolyForm::from_components(3, 1, false, vec![(vec![2], x.scale(&q_frac(-3, 7)))]).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"n":3,"k":1,"has_t":false,"components":[{"I":[2],"poly":[{"exps":[1,0,0],"num":-3,"den":7}]}]}"#);
        let back: PolyForm = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
    }
}
