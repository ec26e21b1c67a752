use std::f64::consts::PI;

use derham::catalog;
use derham::cech::{
    global_primitive, integrate_over_cycle, total_differential, winding, zigzag, CechCochain, CechError, DoubleElement, LocalForm,
    PrimitiveOptions, ZigzagOptions,
};
use derham::forms::sample::{random_form, FormSpec};
use derham::forms::{line_integral, NumericForm, Path, PolyForm};
use derham::quadrature::QuadConfig;
use derham::random::rng;
use derham::simplicial::{homology, star_cover};
use proptest::prelude::*;

fn spec() -> FormSpec {
    FormSpec {
        max_poly_degree: 2,
        max_terms: 2,
        coeff_range: 3,
        max_den: 2,
        density: 0.7,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn delta_squared_vanishes(seed in any::<u64>(), l in 0usize..2, k in 0usize..3) {
        let nerve = star_cover(catalog::annulus()).nerve();
        let c = CechCochain::random(&nerve, l, k, 2, &spec(), &mut rng(seed));
        prop_assert!(c.delta(&nerve).unwrap().delta(&nerve).unwrap().is_exact_zero());
    }

    #[test]
    fn total_differential_squared_vanishes(seed in any::<u64>()) {
        let nerve = star_cover(catalog::disk()).nerve();
        let mut r = rng(seed);
        let mut parts = Vec::new();
        for l in 0..2 {
            for k in 0..3 {
                parts.push(CechCochain::random(&nerve, l, k, 2, &spec(), &mut r));
            }
        }
        let e = DoubleElement::from_parts(parts).unwrap();
        let dd = total_differential(&total_differential(&e, &nerve).unwrap(), &nerve).unwrap();
        prop_assert!(dd.is_exact_zero());
    }

    #[test]
    fn exact_one_forms_have_zero_periods(seed in any::<u64>()) {
        let cover = star_cover(catalog::annulus());
        let nerve = cover.nerve();
        let w = random_form(&mut rng(seed), 2, 0, false, &spec()).d();
        let st = zigzag(&LocalForm::Poly(w), &cover, &ZigzagOptions::default()).unwrap();
        let p = integrate_over_cycle(&st, &homology(&nerve, 1).cycles[0], &nerve).unwrap();
        prop_assert_eq!(p.exact, Some(derham::linalg::q(0)));
    }
}

fn winding_period(opts: &ZigzagOptions, form: &LocalForm) -> f64 {
    let cover = star_cover(catalog::annulus());
    let nerve = cover.nerve();
    let st = zigzag(form, &cover, opts).unwrap();
    integrate_over_cycle(&st, &homology(&nerve, 1).cycles[0], &nerve).unwrap().value
}

#[test]
fn winding_period_matches_line_integral() {
    let cfg = QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    let (oracle, _) = line_integral(&NumericForm::winding(), &Path::circle([0.0, 0.0], 2.5), &cfg).unwrap();
    assert!((oracle - 2.0 * PI).abs() < 1e-10);
    let p = winding_period(&ZigzagOptions::default(), &winding());
    assert!((p.abs() - oracle.abs()).abs() < 1e-6, "{p}");
}

#[test]
fn period_is_gauge_independent() {
    let base = winding_period(&ZigzagOptions::default(), &winding());
    for g in 1..=5 {
        let opts = ZigzagOptions {
            gauge_seed: Some(g),
            ..ZigzagOptions::default()
        };
        let p = winding_period(&opts, &winding());
        assert!((p - base).abs() < 1e-9, "gauge {g}: {p} vs {base}");
    }
}

#[test]
fn period_depends_only_on_the_class() {
    let base = winding_period(&ZigzagOptions::default(), &winding());
    let exact = random_form(&mut rng(11), 2, 0, false, &spec()).d();
    let shifted = NumericForm::winding().add(&NumericForm::from_poly(&exact).unwrap()).unwrap();
    let p = winding_period(&ZigzagOptions::default(), &LocalForm::Numeric(shifted));
    assert!((p - base).abs() < 1e-7, "{p} vs {base}");
}

#[test]
fn primitive_of_area_form_and_refusal_of_winding() {
    let area = PolyForm::dx(2, false, 0).wedge(&PolyForm::dx(2, false, 1)).unwrap();
    let disk = star_cover(catalog::disk());
    let g = global_primitive(&LocalForm::Poly(area.clone()), &disk, &PrimitiveOptions::default()).unwrap();
    assert!(g.exact && g.max_residual == 0.0);
    for (_, xi) in &g.pieces {
        let LocalForm::Poly(xi) = xi else { panic!("exact input gives exact pieces") };
        assert_eq!(xi.d(), area);
    }
    let annulus = star_cover(catalog::annulus());
    match global_primitive(&winding(), &annulus, &PrimitiveOptions::default()) {
        Err(CechError::NonzeroPeriod { cycle, period }) => {
            assert!(cycle.is_cycle());
            assert!((period.abs() - 2.0 * PI).abs() < 1e-6);
        }
        other => panic!("expected a refusal, got {other:?}"),
    }
}
