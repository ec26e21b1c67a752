use derham::forms::poly::Q;
use derham::forms::sample::{random_form, random_rational, FormSpec};
use derham::forms::{FormError, PolyForm};
use derham::random::rng;
use derham::simplicial::parse_rational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::output::{input, Cell, CliError, Csv, Outcome};

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scene {
    pub count: usize,
    pub max_n: usize,
    pub max_k: usize,
    pub max_degree: u32,
    pub eps: Vec<String>,
    pub seed: Option<u64>,
    pub fault: Option<Fault>,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            count: 50,
            max_n: 4,
            max_k: 3,
            max_degree: 3,
            eps: vec!["0".into(), "1/2".into()],
            seed: None,
            fault: None,
        }
    }
}

/// Test fixture: evaluates the homotopy operator at `(1 + ε)/2` while the
/// pullback stays at `ε`, so the identity breaks.
#[derive(Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    ShiftedEps,
}

#[derive(Serialize)]
struct Counterexample {
    index: usize,
    eps: String,
    base: Vec<String>,
    form: PolyForm,
    defect: PolyForm,
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    count: usize,
    checks: usize,
    failures: usize,
    counterexample: Option<Counterexample>,
}

fn defect(w: &PolyForm, base: &[Q], eps: &Q, fault: Option<Fault>) -> Result<PolyForm, FormError> {
    let Some(Fault::ShiftedEps) = fault else {
        return w.homotopy_defect(base, eps);
    };
    let shifted = (eps + Q::one()) / Q::from_integer(2.into());
    let rhs = w.sub(&w.radial_pullback(base, eps)?)?;
    let mut lhs = PolyForm::zero(w.n(), w.degree(), false);
    if w.degree() > 0 {
        lhs = lhs.add(&w.radial_homotopy(base, &shifted)?.d())?;
    }
    let dw = w.d();
    if w.degree() < w.n() && !dw.is_zero() {
        lhs = lhs.add(&dw.radial_homotopy(base, &shifted)?)?;
    }
    lhs.sub(&rhs)
}

pub fn run(scene: Scene, seed: Option<u64>) -> Result<Outcome, CliError> {
    let seed = seed.or(scene.seed).unwrap_or(0);
    if scene.max_n == 0 {
        return Err(CliError::Input("max_n must be at least 1".into()));
    }
    if scene.eps.is_empty() {
        return Err(CliError::Input("eps list is empty".into()));
    }
    let eps = scene
        .eps
        .iter()
        .map(|s| {
            parse_rational(s)
                .filter(|e| *e >= Q::zero() && *e < Q::one())
                .ok_or_else(|| CliError::Input(format!("eps {s:?} is not a rational in [0, 1)")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let spec = FormSpec {
        max_poly_degree: scene.max_degree,
        ..FormSpec::default()
    };
    let mut r = rng(seed);
    let mut csv = Csv::new(seed, &["index", "n", "k", "eps", "exact"]);
    let mut checks = 0;
    let mut failures = 0;
    let mut counterexample = None;
    for index in 0..scene.count {
        let n = r.random_range(1..=scene.max_n);
        let k = r.random_range(0..=scene.max_k.min(n));
        let w = random_form(&mut r, n, k, false, &spec);
        let base: Vec<Q> = (0..n).map(|_| random_rational(&mut r, &spec)).collect();
        for (e, text) in eps.iter().zip(&scene.eps) {
            let dft = defect(&w, &base, e, scene.fault).map_err(input)?;
            let exact = dft.is_zero();
            checks += 1;
            csv.row(&[Cell::U(index), Cell::U(n), Cell::U(k), Cell::S(e.to_string()), Cell::B(exact)]);
            if !exact {
                failures += 1;
                counterexample.get_or_insert_with(|| Counterexample {
                    index,
                    eps: text.clone(),
                    base: base.iter().map(Q::to_string).collect(),
                    form: w.clone(),
                    defect: dft,
                });
            }
        }
    }
    let failure = counterexample
        .as_ref()
        .map(|c| format!("{failures} of {checks} identities have a nonzero defect (first: form {}, eps {})", c.index, c.eps));
    let report = Report {
        seed,
        count: scene.count,
        checks,
        failures,
        counterexample,
    };
    Outcome::new("homotopy-check", &report, csv, failure)
}
