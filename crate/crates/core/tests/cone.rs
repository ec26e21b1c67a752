use derham::catalog;
use derham::cech::{integrate_over_cycle, winding, zigzag, ZigzagOptions};
use derham::cone::{
    critical_exponent, detect_divergence, homotopy_bound_constant, lp_norm_truncated, p_grid, retraction_experiment_quadrature,
    retraction_operator_experiment, scan_threshold, ConeMetric, ProbeForm, RadialForm, TruncationSchedule, Verdict, THRESHOLD_CATALOG,
};
use derham::exec::Exec;
use derham::quadrature::{integrate, QuadConfig};
use derham::simplicial::{homology, star_cover};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn p_star(alpha: i64, m: usize, k: usize) -> f64 {
    critical_exponent(Rational64::from_integer(alpha), m, k).unwrap().to_f64().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn truncated_norm_is_monotone(alpha in 1i64..4, m in 1usize..3, k in 1usize..3, p in 1.0f64..6.0) {
        let g = ConeMetric::integer(alpha, m).unwrap();
        let w = RadialForm::constant(k, 1.0);
        let eps = [0.5, 0.25, 0.1, 0.01, 1e-3];
        let v: Vec<f64> = eps.iter().map(|&e| lp_norm_truncated(&w, &g, p, e).unwrap()).collect();
        // shrinking ε enlarges the domain
        for pair in v.windows(2) {
            prop_assert!(pair[1] >= pair[0] * (1.0 - 1e-12));
        }
    }

    #[test]
    fn verdict_matches_the_exponent(alpha in 1i64..4, m in 1usize..4, k in 1usize..3, offset in 0.1f64..2.0) {
        let g = ConeMetric::integer(alpha, m).unwrap();
        let w = RadialForm::constant(k, 1.0);
        let ps = p_star(alpha, m, k);
        let s = TruncationSchedule::default();
        if ps - offset >= 1.0 {
            prop_assert_eq!(detect_divergence(&w, &g, ps - offset, &s).unwrap().verdict, Verdict::Converges);
        }
        for p in [ps, ps + offset] {
            if p >= 1.0 {
                prop_assert_eq!(detect_divergence(&w, &g, p, &s).unwrap().verdict, Verdict::Diverges);
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature(alpha in 1i64..3, m in 1usize..3, k in 1usize..3, p in 1.2f64..5.0, b_extra in 0.05f64..3.0, eps in 0.0f64..0.9) {
        prop_assume!(k <= m + 1);
        let g = ConeMetric::integer(alpha, m).unwrap();
        let w = ProbeForm { k, b: ProbeForm::min_b(k, &g, p) + b_extra, base_norm: 1.5 };
        let a = retraction_operator_experiment(&w, &g, p, eps).unwrap();
        let q = retraction_experiment_quadrature(&w, &g, p, eps).unwrap();
        for (x, y) in [(a.norm, q.norm), (a.homotopy_norm, q.homotopy_norm), (a.pullback_norm, q.pullback_norm)] {
            // R_0 ω is infinite when t^b is not integrable at 0
            prop_assert!(x == y || (x - y).abs() <= 1e-6 * x.abs().max(1e-12), "{} vs {}", x, y);
        }
    }
}

#[test]
fn scans_flip_once_next_to_the_exponent() {
    let s = TruncationSchedule::default();
    let step = 0.05;
    for (alpha, m, k) in THRESHOLD_CATALOG {
        let g = ConeMetric::integer(alpha, m).unwrap();
        let w = RadialForm::constant(k, 1.0);
        let ps = p_star(alpha, m, k);
        let grid = p_grid(1.0, ps + 1.0, step).unwrap();
        let scan = scan_threshold(&w, &g, &grid, &s, Exec::default()).unwrap();
        assert_eq!(scan.flips, 1, "({alpha},{m},{k})");
        let (lo, hi) = scan.bracket.unwrap();
        assert!(lo < ps + 1e-9 && hi >= ps - 1e-9 && hi - lo <= step + 1e-9, "({alpha},{m},{k}): [{lo}, {hi}] vs {ps}");
    }
}

#[test]
fn norm_grows_as_p_crosses_toward_divergence() {
    let g = ConeMetric::integer(1, 1).unwrap();
    let w = RadialForm::constant(1, 1.0);
    let v: Vec<f64> = [1.0, 1.5, 1.9, 1.99].iter().map(|&p| lp_norm_truncated(&w, &g, p, 1e-4).unwrap()).collect();
    for pair in v.windows(2) {
        assert!(pair[1] >= pair[0], "{v:?}");
    }
}

#[test]
fn bound_constant_blows_up_toward_the_threshold() {
    // threshold μ/(1 + (k−1)λ) = 2 for λ = 1, μ = 2, k = 1
    assert!((homotopy_bound_constant(3.0, 1.0, 0.0, 1, 0.25).unwrap() - 0.75).abs() < 1e-15);
    let ps = [4.0, 3.0, 2.5, 2.1, 2.01, 2.001];
    let c: Vec<f64> = ps.iter().map(|&p| homotopy_bound_constant(p, 1.0, 2.0, 1, 0.0).unwrap()).collect();
    for pair in c.windows(2) {
        assert!(pair[1] > pair[0], "{c:?}");
    }
    assert!(c[5] > 1e3);
    assert!(homotopy_bound_constant(2.0, 1.0, 2.0, 1, 0.0).is_err());
}

#[test]
fn pullback_shrinks_with_eps() {
    let g = ConeMetric::integer(1, 1).unwrap();
    let w = ProbeForm { k: 1, b: 0.0, base_norm: 1.0 };
    let eps: Vec<f64> = (1..=12).map(|j| 0.5f64.powi(j)).collect();
    let pull: Vec<f64> = eps.iter().map(|&e| retraction_operator_experiment(&w, &g, 3.0, e).unwrap().pullback_norm).collect();
    for pair in pull.windows(2) {
        assert!(pair[1] < pair[0]);
    }
    assert!(pull[11] < 1e-3 * pull[0]);
    let zero = ProbeForm { base_norm: 0.0, ..w };
    assert_eq!(retraction_operator_experiment(&zero, &g, 3.0, 0.5).unwrap().ratio, 0.0);
}

#[test]
fn winding_form_has_finite_norm_and_a_period() {
    // cone over the circle, α = m = k = 1: the base form dy is radially
    // constant and lies in L^p below p* = 2
    let g = ConeMetric::integer(1, 1).unwrap();
    let w = RadialForm::constant(1, 1.0);
    let r = detect_divergence(&w, &g, 1.5, &TruncationSchedule::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Converges);
    assert!(lp_norm_truncated(&w, &g, 1.5, 1e-6).unwrap().is_finite());
    // the punctured cone retracts onto an annulus; the same form there
    let cover = star_cover(catalog::annulus());
    let nerve = cover.nerve();
    let st = zigzag(&winding(), &cover, &ZigzagOptions::default()).unwrap();
    let period = integrate_over_cycle(&st, &homology(&nerve, 1).cycles[0], &nerve).unwrap().value;
    assert!(period.abs() > 1.0, "{period}");
}

#[test]
fn chart_integrals_stay_in_the_distortion_envelope() {
    // S = graph of ξ over [0, 1] with chart φ(x) = (x, ξ(x)); |φ'| lies in
    // [1, √(1 + L²)], so ∫_S f ds / ∫ f∘φ dx lies in the same range
    let cfg = QuadConfig::default();
    let lip = 0.8f64;
    let xi_prime = |x: f64| lip * (3.0 * x).sin();
    let xi = |x: f64| lip * (1.0 - (3.0 * x).cos()) / 3.0;
    let speed = |x: f64| (1.0 + xi_prime(x).powi(2)).sqrt();
    let integrands: [&dyn Fn(f64, f64) -> f64; 3] = [&|_, _| 1.0, &|a, b| (a + b).powi(2), &|a, b| (5.0 * a).cos().powi(2) + b];
    for f in integrands {
        let on_s = integrate(|x| f(x, xi(x)) * speed(x), 0.0, 1.0, &cfg).unwrap().0;
        let flat = integrate(|x| f(x, xi(x)), 0.0, 1.0, &cfg).unwrap().0;
        let ratio = on_s / flat;
        assert!((1.0..=(1.0 + lip * lip).sqrt()).contains(&ratio), "{ratio}");
    }
}
