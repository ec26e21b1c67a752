use std::collections::BTreeMap;

use rand::Rng;

use super::LocalForm;
use crate::forms::sample::{random_form, FormSpec};
use crate::forms::{sort_sign, FormError};
use crate::simplicial::SimplicialComplex;

/// An element of `C^l(U, Ω^k)`: a `k`-form on `U_I` for each nerve
/// `l`-simplex `I`. Stored on sorted tuples; reading a permuted tuple applies
/// the permutation sign. Missing entries are zero.
#[derive(Clone, Debug)]
pub struct CechCochain {
    pub l: usize,
    pub k: usize,
    pub n: usize,
    values: BTreeMap<Vec<usize>, LocalForm>,
}

impl CechCochain {
    pub fn zero(l: usize, k: usize, n: usize) -> Self {
        CechCochain {
            l,
            k,
            n,
            values: BTreeMap::new(),
        }
    }

    /// Sets the value on the tuple `index` (any vertex order).
    pub fn set(&mut self, index: &[usize], w: LocalForm) -> Result<(), FormError> {
        if index.len() != self.l + 1 {
            return Err(FormError::Malformed(format!(
                "tuple {index:?} does not have Cech degree {}",
                self.l
            )));
        }
        if w.degree() != self.k || w.n() != self.n {
            return Err(FormError::InvalidDegree {
                degree: w.degree(),
                reason: format!("cochain holds {}-forms on ℝ^{}", self.k, self.n),
            });
        }
        let s = sort_sign(index);
        if s == 0 {
            return Ok(());
        }
        let mut key = index.to_vec();
        key.sort_unstable();
        let w = if s < 0 { LocalForm::zero(self.n, self.k).sub(&w)? } else { w };
        if w.is_exact_zero() {
            self.values.remove(&key);
        } else {
            self.values.insert(key, w);
        }
        Ok(())
    }

    /// Value on the tuple `index`, with the alternating sign.
    pub fn get(&self, index: &[usize]) -> Result<LocalForm, FormError> {
        let s = sort_sign(index);
        let zero = LocalForm::zero(self.n, self.k);
        if s == 0 {
            return Ok(zero);
        }
        let mut key = index.to_vec();
        key.sort_unstable();
        match self.values.get(&key) {
            None => Ok(zero),
            Some(w) if s > 0 => Ok(w.clone()),
            Some(w) => zero.sub(w),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &LocalForm)> {
        self.values.iter()
    }

    /// Exactly zero (every entry is an exact zero).
    pub fn is_exact_zero(&self) -> bool {
        self.values.values().all(|w| w.is_exact_zero())
    }

    /// `(δφ)_I = Σ_m (−1)^m φ_{I∖i_m}` on every nerve `(l+1)`-simplex.
    pub fn delta(&self, nerve: &SimplicialComplex) -> Result<CechCochain, FormError> {
        let mut out = CechCochain::zero(self.l + 1, self.k, self.n);
        for tuple in nerve.simplices(self.l + 1) {
            let mut acc = LocalForm::zero(self.n, self.k);
            let mut touched = false;
            for m in 0..tuple.len() {
                let mut face = tuple.clone();
                face.remove(m);
                if !self.values.contains_key(&face) {
                    continue;
                }
                touched = true;
                let v = &self.values[&face];
                acc = if m % 2 == 0 { acc.add(v)? } else { acc.sub(v)? };
            }
            if touched {
                out.set(tuple, acc)?;
            }
        }
        Ok(out)
    }

    /// Entrywise exterior derivative.
    pub fn d(&self) -> CechCochain {
        CechCochain {
            l: self.l,
            k: self.k + 1,
            n: self.n,
            values: self
                .values
                .iter()
                .map(|(i, w)| (i.clone(), w.d()))
                .filter(|(_, w)| !w.is_exact_zero())
                .collect(),
        }
    }

    pub fn add(&self, other: &CechCochain) -> Result<CechCochain, FormError> {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &CechCochain) -> Result<CechCochain, FormError> {
        self.combine(other, -1)
    }

    fn combine(&self, other: &CechCochain, b: i64) -> Result<CechCochain, FormError> {
        if (self.l, self.k, self.n) != (other.l, other.k, other.n) {
            return Err(FormError::Malformed("cochain shapes differ".into()));
        }
        let mut out = self.clone();
        for (i, w) in &other.values {
            let cur = out.get(i)?;
            out.set(i, cur.combine(1, w, b)?)?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> Result<CechCochain, FormError> {
        CechCochain::zero(self.l, self.k, self.n).sub(self)
    }

    /// A random exact cochain on the nerve simplices of degree `l`.
    pub fn random<R: Rng + ?Sized>(nerve: &SimplicialComplex, l: usize, k: usize, n: usize, spec: &FormSpec, rng: &mut R) -> CechCochain {
        let mut c = CechCochain::zero(l, k, n);
        for tuple in nerve.simplices(l) {
            let w = random_form(rng, n, k, false, spec);
            c.set(tuple, LocalForm::Poly(w)).expect("shape matches");
        }
        c
    }
}

/// A finite sum of homogeneous pieces in `⊕_{l,k} C^l(U, Ω^k)`.
#[derive(Clone, Debug, Default)]
pub struct DoubleElement {
    pub parts: BTreeMap<(usize, usize), CechCochain>,
}

impl DoubleElement {
    pub fn from_parts(parts: Vec<CechCochain>) -> Result<Self, FormError> {
        let mut e = DoubleElement::default();
        for p in parts {
            e.add_part(p)?;
        }
        Ok(e)
    }

    pub fn add_part(&mut self, c: CechCochain) -> Result<(), FormError> {
        let key = (c.l, c.k);
        let merged = match self.parts.remove(&key) {
            Some(old) => old.add(&c)?,
            None => c,
        };
        self.parts.insert(key, merged);
        Ok(())
    }

    pub fn is_exact_zero(&self) -> bool {
        self.parts.values().all(|c| c.is_exact_zero())
    }
}

/// `D = δ + (−1)^l d` on `C^l(U, Ω^k)`, extended additively. With this sign
/// `D² = δ² ± (dδ − δd) + d² = 0`.
pub fn total_differential(e: &DoubleElement, nerve: &SimplicialComplex) -> Result<DoubleElement, FormError> {
    let mut out = DoubleElement::default();
    for c in e.parts.values() {
        out.add_part(c.delta(nerve)?)?;
        let dc = c.d();
        if c.k < c.n {
            out.add_part(if c.l % 2 == 0 { dc } else { dc.neg()? })?;
        }
    }
    Ok(out)
}
