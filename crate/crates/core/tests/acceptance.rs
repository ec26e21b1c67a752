//! The acceptance run: every criterion at its stated tolerance, one line
//! each. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use derham::catalog;
use derham::cech::{
    global_primitive, integrate_over_cycle, total_differential, winding, zigzag, CechCochain, CechError, DoubleElement, LocalForm,
    PrimitiveOptions, ZigzagOptions,
};
use derham::cone::{
    bound_threshold, critical_exponent, fit_model_exponents, homotopy_bound_constant, operator_norm_estimate, p_grid,
    retraction_operator_experiment, scan_threshold, ConeMetric, ProbeForm, RadialForm, TruncationSchedule, THRESHOLD_CATALOG,
};
use derham::exec::Exec;
use derham::flattening::{build_flattening, family_catalog, graph_cone_bound, tilted_cone_bound, VerifySpec};
use derham::forms::poly::Q;
use derham::forms::sample::{random_form, FormSpec};
use derham::forms::{line_integral, NumericForm, Path, PolyForm};
use derham::lifts::{criterion_ratio, fit_growth_exponents, standard_lift, CellTower, FunctionDescriptor, GrowthSpec, Level, Retraction};
use derham::quadrature::QuadConfig;
use derham::random::{in_box, rng};
use derham::simplicial::{betti_numbers, homology, star_cover, Chain, SimplicialComplex};
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("{what} took {:.1} s, limit {limit} s", elapsed.as_secs_f64()))
}

fn deg3() -> FormSpec {
    FormSpec {
        max_poly_degree: 3,
        max_terms: 3,
        coeff_range: 4,
        max_den: 3,
        density: 0.6,
    }
}

fn base_point(seed: u64, n: usize) -> Vec<Q> {
    let mut r = rng(seed ^ 0xba5e);
    (0..n).map(|_| Q::new(r.random_range(-3i64..=3).into(), r.random_range(1i64..=3).into())).collect()
}

fn homotopy_identity() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for seed in 0..50u64 {
        let n = 1 + (seed as usize % 4);
        let k = (seed as usize / 4) % (n.min(3) + 1);
        let w = random_form(&mut rng(seed), n, k, false, &deg3());
        for eps in [Q::zero(), Q::new(1.into(), 2.into())] {
            let defect = w.homotopy_defect(&base_point(seed, n), &eps).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(defect.is_zero(), || format!("seed {seed}, n = {n}, k = {k}, ε = {eps}: nonzero defect"))?;
            checks += 1;
        }
    }
    within(start.elapsed(), 10.0, "identity checks")?;
    Ok(format!("{checks} exact checks, zero defect ({:.2} s)", start.elapsed().as_secs_f64()))
}

fn poincare_lemma() -> Outcome {
    let mut done = 0;
    let mut seed = 0u64;
    while done < 20 {
        seed += 1;
        let n = 2 + (seed as usize % 3);
        let k = seed as usize % n;
        let w = random_form(&mut rng(seed), n, k, false, &deg3()).d();
        if w.is_zero() {
            continue;
        }
        let gamma = w.radial_homotopy(&base_point(seed, n), &Q::zero()).map_err(|e| e.to_string())?;
        ensure(gamma.d() == w, || format!("seed {seed}: dγ ≠ ω"))?;
        done += 1;
    }
    Ok("20 closed forms, dγ = ω exactly".into())
}

fn random_complex(seed: u64) -> SimplicialComplex {
    let mut r = rng(seed);
    let n = r.random_range(4..=8usize);
    let mut facets: Vec<Vec<usize>> = (0..r.random_range(1..=6))
        .map(|_| {
            let d = r.random_range(1..=4usize);
            let mut f = sample(&mut r, n, d).into_vec();
            f.sort();
            f
        })
        .collect();
    facets.extend((0..n).map(|v| vec![v]));
    SimplicialComplex::abstract_complex(n, facets).expect("valid facets")
}

fn structural_identities() -> Outcome {
    let small = FormSpec {
        max_poly_degree: 2,
        max_terms: 2,
        coeff_range: 3,
        max_den: 2,
        density: 0.7,
    };
    let annulus = star_cover(catalog::annulus()).nerve();
    let disk = star_cover(catalog::disk()).nerve();
    for seed in 0..100u64 {
        let n = 1 + (seed as usize % 4);
        let k = seed as usize % (n + 1);
        ensure(random_form(&mut rng(seed), n, k, seed % 2 == 0, &deg3()).d().d().is_zero(), || format!("d² ≠ 0, seed {seed}"))?;

        let c = CechCochain::random(&annulus, (seed % 2) as usize, (seed % 3) as usize, 2, &small, &mut rng(seed));
        let dd = c.delta(&annulus).and_then(|c| c.delta(&annulus)).map_err(|e| e.to_string())?;
        ensure(dd.is_exact_zero(), || format!("δ² ≠ 0, seed {seed}"))?;

        let mut r = rng(seed ^ 0xd);
        let parts = (0..2).flat_map(|l| (0..3).map(move |k| (l, k))).map(|(l, k)| CechCochain::random(&disk, l, k, 2, &small, &mut r)).collect();
        let e = DoubleElement::from_parts(parts).map_err(|e| e.to_string())?;
        let de = total_differential(&e, &disk).and_then(|x| total_differential(&x, &disk)).map_err(|e| e.to_string())?;
        ensure(de.is_exact_zero(), || format!("D² ≠ 0, seed {seed}"))?;

        let kx = random_complex(seed);
        let mut r = rng(seed ^ 0xc);
        for d in 0..=kx.dim() {
            let chain = Chain::from_terms(kx.simplices(d).iter().map(|s| (s.clone(), Q::from_integer(r.random_range(-3i64..=3).into()))));
            ensure(chain.boundary().boundary().is_zero(), || format!("∂² ≠ 0, seed {seed}, degree {d}"))?;
        }
    }
    Ok("d², δ², D², ∂² vanish exactly on 100 instances each".into())
}

fn nerve_homology() -> Outcome {
    let trim = |mut v: Vec<usize>| {
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    };
    let spaces = [
        ("interval", catalog::interval()),
        ("circle", catalog::circle()),
        ("disk", catalog::disk()),
        ("tetrahedron boundary", catalog::tetrahedron_boundary()),
        ("cylinder", catalog::cylinder()),
    ];
    let mut rows = Vec::new();
    for (name, k) in spaces {
        let a = trim(betti_numbers(&k));
        let b = trim(betti_numbers(&star_cover(k.clone()).nerve()));
        ensure(a == b, || format!("{name}: complex {a:?}, nerve {b:?}"))?;
        rows.push(format!("{name} {a:?}"));
    }
    Ok(rows.join(", "))
}

fn period_of(form: &LocalForm, opts: &ZigzagOptions) -> Result<f64, String> {
    let cover = star_cover(catalog::annulus());
    let nerve = cover.nerve();
    let st = zigzag(form, &cover, opts).map_err(|e| e.to_string())?;
    Ok(integrate_over_cycle(&st, &homology(&nerve, 1).cycles[0], &nerve).map_err(|e| e.to_string())?.value)
}

fn cycle_integral() -> Outcome {
    let start = Instant::now();
    let cfg = QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    let (oracle, _) = line_integral(&NumericForm::winding(), &Path::circle([0.0, 0.0], 2.5), &cfg).map_err(|e| format!("{e:?}"))?;
    ensure((oracle - 2.0 * PI).abs() < 1e-10, || format!("oracle {oracle}"))?;
    let p = period_of(&winding(), &ZigzagOptions::default())?;
    ensure((p.abs() - oracle.abs()).abs() < 1e-6, || format!("period {p}, oracle {oracle}"))?;
    let mut worst_exact = 0.0f64;
    for seed in 0..10u64 {
        let w = random_form(&mut rng(seed), 2, 0, false, &deg3()).d();
        worst_exact = worst_exact.max(period_of(&LocalForm::Poly(w), &ZigzagOptions::default())?.abs());
    }
    ensure(worst_exact < 1e-9, || format!("exact-form period {worst_exact}"))?;
    let mut spread = 0.0f64;
    for g in 1..=5 {
        let opts = ZigzagOptions {
            gauge_seed: Some(g),
            ..ZigzagOptions::default()
        };
        spread = spread.max((period_of(&winding(), &opts)? - p).abs());
    }
    ensure(spread < 1e-9, || format!("gauge spread {spread}"))?;
    within(start.elapsed(), 30.0, "cycle integrals")?;
    Ok(format!(
        "period {p:.12}, |error| {:.1e}, exact periods ≤ {worst_exact:.1e}, gauge spread {spread:.1e} ({:.2} s)",
        (p.abs() - oracle).abs(),
        start.elapsed().as_secs_f64()
    ))
}

fn global_primitive_check() -> Outcome {
    let area = PolyForm::dx(2, false, 0).wedge(&PolyForm::dx(2, false, 1)).map_err(|e| e.to_string())?;
    let g = global_primitive(&LocalForm::Poly(area.clone()), &star_cover(catalog::disk()), &PrimitiveOptions::default()).map_err(|e| e.to_string())?;
    ensure(g.exact, || "primitive not exact".into())?;
    for (facet, xi) in &g.pieces {
        let LocalForm::Poly(xi) = xi else {
            return Err(format!("facet {facet:?}: numeric piece for exact input"));
        };
        ensure(xi.d() == area, || format!("facet {facet:?}: dξ ≠ ω"))?;
    }
    match global_primitive(&winding(), &star_cover(catalog::annulus()), &PrimitiveOptions::default()) {
        Err(CechError::NonzeroPeriod { cycle, period }) => {
            ensure(cycle.is_cycle() && (period.abs() - 2.0 * PI).abs() < 1e-6, || format!("bad certificate, period {period}"))?;
            Ok(format!("dξ = dx∧dy on {} facets; winding refused, certificate period {period:.9}", g.pieces.len()))
        }
        other => Err(format!("winding form not refused: {other:?}")),
    }
}

fn cone_exponent() -> Outcome {
    let start = Instant::now();
    let s = TruncationSchedule::default();
    let grid = p_grid(1.0, 4.5, 0.025).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for (alpha, m, k) in THRESHOLD_CATALOG {
        let ps = critical_exponent(Rational64::from_integer(alpha), m, k).map_err(|e| e.to_string())?.to_f64().unwrap();
        let scan = scan_threshold(&RadialForm::constant(k, 1.0), &ConeMetric::integer(alpha, m).unwrap(), &grid, &s, Exec::default())
            .map_err(|e| e.to_string())?;
        let (lo, hi) = scan.bracket.ok_or_else(|| format!("({alpha},{m},{k}): no bracket"))?;
        ensure((lo - ps).abs() <= 0.05 && (hi - ps).abs() <= 0.05, || format!("({alpha},{m},{k}): [{lo}, {hi}] vs p* = {ps}"))?;
        rows.push(format!("({alpha},{m},{k}) p* {ps} in [{lo:.3}, {hi:.3}]"));
    }
    within(start.elapsed(), 20.0, "threshold scans")?;
    Ok(format!("{} ({:.2} s)", rows.join(", "), start.elapsed().as_secs_f64()))
}

fn homotopy_constant() -> Outcome {
    let g = ConeMetric::integer(1, 1).unwrap();
    let k = 1;
    let fit = fit_model_exponents(&g, 0, Exec::default()).map_err(|e| e.to_string())?;
    let (lam, mu) = (fit.lambda, fit.mu);
    let thr = bound_threshold(lam, mu, k);
    let offsets = [2.0, 1.0, 0.5, 0.1, 0.01, 0.001];
    let mut worst = 0.0f64;
    let mut at_zero = Vec::new();
    for d in offsets {
        let p = thr + d;
        for eps in [0.0, 1.0 / 16.0, 0.25, 0.5] {
            let est = operator_norm_estimate(&g, k, p, eps, 200).map_err(|e| e.to_string())?;
            let bound = homotopy_bound_constant(p, lam, mu, k, eps).map_err(|e| e.to_string())?;
            ensure(est.ratio <= bound * 1.05, || format!("p = {p}, ε = {eps}: ratio {} > 1.05 × {bound}", est.ratio))?;
            worst = worst.max(est.ratio / bound);
            if eps == 0.0 {
                at_zero.push(est.ratio);
            }
        }
    }
    let growth = at_zero[at_zero.len() - 1] / at_zero[0];
    ensure(growth >= 10.0, || format!("ratio grows only {growth}× toward the threshold"))?;
    let pull_p = mu / (k as f64 * lam) + 1.0;
    let probe = ProbeForm { k, b: 0.0, base_norm: 1.0 };
    let pulls = (1..=12)
        .map(|j| retraction_operator_experiment(&probe, &g, pull_p, 0.5f64.powi(j)).map(|r| r.pullback_norm))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    ensure(pulls.windows(2).all(|w| w[1] < w[0]), || "pullback norm not decreasing".into())?;
    let drop = pulls[pulls.len() - 1] / pulls[0];
    ensure(drop < 1e-3, || format!("pullback only drops to {drop} of its ε = 1/2 value"))?;
    Ok(format!(
        "λ̂ {lam:.4}, μ̂ {mu:.4}, max ratio/bound {worst:.4}, growth {growth:.1}×, pullback drop {drop:.1e}"
    ))
}

fn example_dichotomy() -> Outcome {
    let zero = FunctionDescriptor::new("0", 0.0).unwrap();
    let xi = FunctionDescriptor::new("abs(x1^2 - x2)", 3.0).unwrap();
    let radial = Retraction::diagonal(vec![1.0, 1.0]);
    let mut worst = 0.0f64;
    let mut at = [0.0; 2];
    for t in [0.5f64, 0.3, 0.1, 0.05, 0.02, 0.01] {
        let x = [t, t * t + t.powi(5)];
        let got = criterion_ratio(&zero, &xi, &radial, &x, t).map_err(|e| e.to_string())?.ok_or("zero denominator")?;
        let want = (t.powi(4) - t.powi(3) - t.powi(6)).abs() / t.powi(5);
        worst = worst.max((got - want).abs() / want);
        if t == 0.1 {
            at[0] = got;
        }
        if t == 0.01 {
            at[1] = got;
        }
    }
    ensure(worst <= 1e-9, || format!("relative error {worst}"))?;
    ensure((at[0] - 90.1).abs() < 0.05, || format!("ratio at t = 0.1 is {}", at[0]))?;
    ensure(at[1] > 1e3, || format!("ratio at t = 0.01 is {}", at[1]))?;
    let weighted = Retraction::custom(&["t*x1", "t^2*x2"]).unwrap();
    let mut r = rng(9);
    let mut dev = 0.0f64;
    let mut count = 0;
    for _ in 0..2000 {
        let x = in_box(&mut r, &[-1.0, -1.0], &[1.0, 1.0]);
        for t in [1e-3, 0.01, 0.1, 0.5, 0.9] {
            if let Some(v) = criterion_ratio(&zero, &xi, &weighted, &x, t).map_err(|e| e.to_string())? {
                dev = dev.max((v - t * t).abs());
                count += 1;
            }
        }
    }
    ensure(dev <= 1e-12, || format!("weighted ratio deviates from t² by {dev}"))?;
    Ok(format!(
        "ratio(0.1) {:.6}, ratio(0.01) {:.1}, rel. error {worst:.1e}; weighted |ratio − t²| ≤ {dev:.1e} on {count} samples",
        at[0], at[1]
    ))
}

fn growth_exponents() -> Outcome {
    let radial = fit_growth_exponents(&Retraction::diagonal(vec![1.0, 1.0]), &GrowthSpec::unit_box(2)).map_err(|e| e.to_string())?;
    ensure((radial.lambda - 1.0).abs() <= 0.05 && (radial.mu - 2.0).abs() <= 0.05, || format!("tx: {} {}", radial.lambda, radial.mu))?;
    let base = Retraction::custom(&["t*x1", "t^2*x2"]).unwrap();
    let w = fit_growth_exponents(&base, &GrowthSpec::unit_box(2)).map_err(|e| e.to_string())?;
    ensure((w.lambda - 1.0).abs() <= 0.05 && (w.mu - 3.0).abs() <= 0.05, || format!("(tx1, t²x2): {} {}", w.lambda, w.mu))?;
    let level = Level::Band {
        lower: FunctionDescriptor::new("0", 0.0).unwrap(),
        upper: FunctionDescriptor::new("abs(x1^2 - x2)", 3.0).unwrap(),
    };
    let cell = CellTower::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap().with_level(level.clone());
    let band = fit_growth_exponents(&standard_lift(&base, level), &GrowthSpec::on(cell)).map_err(|e| e.to_string())?;
    ensure((band.mu - 5.0).abs() <= 0.1, || format!("band lift μ̂ {}", band.mu))?;
    Ok(format!(
        "tx ({:.4}, {:.4}); (tx1, t²x2) ({:.4}, {:.4}); band lift μ̂ {:.4}",
        radial.lambda, radial.mu, w.lambda, w.mu, band.mu
    ))
}

fn flattening_lemmas() -> Outcome {
    let samples = 100_000;
    let xi = FunctionDescriptor::new("0.6*abs(x1) - 0.8*x2", 1.0).unwrap();
    let g = graph_cone_bound(&xi, 2, 0.8, samples, 11, Exec::default()).map_err(|e| e.to_string())?;
    ensure(g.passed(), || format!("graph cone: {} violations, witness {:?}", g.violations, g.witness))?;
    let t = tilted_cone_bound(&[0.1, 0.0, 0.99f64.sqrt()], 0.9, samples, 11, Exec::default()).map_err(|e| e.to_string())?;
    ensure(t.check.passed() && !t.check.vacuous, || format!("tilted cone: {:?}", t.check))?;
    let spec = VerifySpec {
        samples: 20_000,
        ..VerifySpec::default()
    };
    let mut worst_trip = 0.0f64;
    for (name, f) in family_catalog() {
        let rep = build_flattening(f).verify(&spec, 64, Exec::default()).map_err(|e| format!("{name}: {e}"))?;
        worst_trip = worst_trip.max(rep.round_trip.max_error);
        ensure(rep.round_trip.max_error <= 1e-9, || format!("{name}: round trip {:?}", rep.round_trip))?;
        for v in &rep.vertical {
            ensure(v.passed, || format!("{name} stage {}: vertical-line test {v:?}", v.stage))?;
        }
    }
    Ok(format!(
        "M/(1+L) = {} and M' = {:.6}: 0 violations in {samples} samples each; round trip ≤ {worst_trip:.1e}; vertical lines pass on {} families",
        g.aperture,
        t.check.aperture,
        family_catalog().len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exact homotopy identity", homotopy_identity),
        ("Poincaré lemma primitive", poincare_lemma),
        ("structural identities", structural_identities),
        ("nerve vs complex homology", nerve_homology),
        ("cycle integral of the winding form", cycle_integral),
        ("global primitive and refusal", global_primitive_check),
        ("cone critical exponent", cone_exponent),
        ("homotopy operator bound", homotopy_constant),
        ("band criterion dichotomy", example_dichotomy),
        ("growth exponents", growth_exponents),
        ("flattening lemmas", flattening_lemmas),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
