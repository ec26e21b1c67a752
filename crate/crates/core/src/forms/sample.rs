//! Random exact polynomials and forms for property checks.

use rand::Rng;

use super::poly::{Polynomial, Q};
use super::{subsets, PolyForm};

#[derive(Clone, Copy, Debug)]
pub struct FormSpec {
    pub max_poly_degree: u32,
    pub max_terms: usize,
    /// Numerators drawn from `−coeff_range..=coeff_range`.
    pub coeff_range: i64,
    /// Denominators drawn from `1..=max_den`.
    pub max_den: i64,
    /// Probability that a coefficient slot is nonzero.
    pub density: f64,
}

impl Default for FormSpec {
    fn default() -> Self {
        FormSpec {
            max_poly_degree: 3,
            max_terms: 3,
            coeff_range: 5,
            max_den: 3,
            density: 0.7,
        }
    }
}

pub fn random_rational<R: Rng + ?Sized>(rng: &mut R, spec: &FormSpec) -> Q {
    let num = rng.random_range(-spec.coeff_range..=spec.coeff_range);
    let den = rng.random_range(1..=spec.max_den.max(1));
    Q::new(num.into(), den.into())
}

pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, n_vars: usize, spec: &FormSpec) -> Polynomial {
    let terms = rng.random_range(1..=spec.max_terms.max(1));
    let mut p = Polynomial::zero(n_vars);
    for _ in 0..terms {
        let total = rng.random_range(0..=spec.max_poly_degree);
        let mut exps = vec![0u32; n_vars];
        if n_vars > 0 {
            for _ in 0..total {
                exps[rng.random_range(0..n_vars)] += 1;
            }
        }
        p = p.add(&Polynomial::monomial(exps, random_rational(rng, spec)));
    }
    p
}

/// A random `k`-form on ℝⁿ (optionally ℝⁿ × I).
pub fn random_form<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, has_t: bool, spec: &FormSpec) -> PolyForm {
    let vars = n + usize::from(has_t);
    let mut comps = Vec::new();
    for set in subsets(vars, k) {
        if rng.random::<f64>() < spec.density {
            comps.push((set, random_polynomial(rng, vars, spec)));
        }
    }
    PolyForm::from_components(n, k, has_t, comps).expect("generated index sets are valid")
}
