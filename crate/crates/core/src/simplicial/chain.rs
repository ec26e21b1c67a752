use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::forms::sort_sign;
use crate::linalg::Q;

/// A formal ℚ-linear combination of oriented simplices.
///
/// Keys are sorted vertex tuples; an input tuple in another order is
/// normalized with its permutation sign.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Chain {
    terms: BTreeMap<Vec<usize>, Q>,
}

impl Chain {
    pub fn zero() -> Self {
        Chain::default()
    }

    pub fn simplex(s: &[usize]) -> Self {
        let mut c = Chain::zero();
        c.add_term(s, Q::one());
        c
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<usize>, Q)>>(terms: I) -> Self {
        let mut c = Chain::zero();
        for (s, a) in terms {
            c.add_term(&s, a);
        }
        c
    }

    /// Adds `a·[s]`. Tuples with a repeated vertex are degenerate and vanish.
    pub fn add_term(&mut self, s: &[usize], a: Q) {
        let sign = sort_sign(s);
        if sign == 0 || a.is_zero() {
            return;
        }
        let mut key = s.to_vec();
        key.sort_unstable();
        let a = if sign < 0 { -a } else { a };
        let e = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *e += a;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Q)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, s: &[usize]) -> Q {
        let sign = sort_sign(s);
        if sign == 0 {
            return Q::zero();
        }
        let mut key = s.to_vec();
        key.sort_unstable();
        let c = self.terms.get(&key).cloned().unwrap_or_else(Q::zero);
        if sign < 0 {
            -c
        } else {
            c
        }
    }

    /// Common dimension of the simplices, `None` for the zero chain or a
    /// chain of mixed dimension.
    pub fn dim(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|s| s.len() - 1);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn add(&self, other: &Chain) -> Chain {
        let mut out = self.clone();
        for (s, a) in &other.terms {
            out.add_term(s, a.clone());
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Chain {
        let mut out = Chain::zero();
        for (s, a) in &self.terms {
            out.add_term(s, a * c);
        }
        out
    }

    /// `∂[i₀,…,i_l] = Σ_{j=0}^{l} (−1)^j [i₀,…,î_j,…,i_l]`; vertices have
    /// zero boundary.
    pub fn boundary(&self) -> Chain {
        let mut out = Chain::zero();
        for (s, a) in &self.terms {
            if s.len() < 2 {
                continue;
            }
            for j in 0..s.len() {
                let mut f = s.clone();
                f.remove(j);
                out.add_term(&f, if j % 2 == 0 { a.clone() } else { -a.clone() });
            }
        }
        out
    }

    pub fn is_cycle(&self) -> bool {
        self.boundary().is_zero()
    }
}

impl fmt::Debug for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (s, a) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if !a.is_one() {
                write!(f, "({a})")?;
            }
            write!(f, "{s:?}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainTermJson {
    pub simplex: Vec<usize>,
    pub coeff: String,
}

impl Serialize for Chain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<ChainTermJson> = self
            .terms
            .iter()
            .map(|(k, a)| ChainTermJson {
                simplex: k.clone(),
                coeff: a.to_string(),
            })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Chain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<ChainTermJson>::deserialize(d)?;
        let mut c = Chain::zero();
        for t in v {
            let a = super::parse_rational(&t.coeff)
                .ok_or_else(|| serde::de::Error::custom(format!("bad coefficient {:?}", t.coeff)))?;
            c.add_term(&t.simplex, a);
        }
        Ok(c)
    }
}
