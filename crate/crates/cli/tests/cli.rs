use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn derham(args: &[&str], scene: Option<&Path>) -> Output {
    derham_env(args, scene, None)
}

fn derham_env(args: &[&str], scene: Option<&Path>, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_derham"));
    cmd.args(args);
    if let Some(s) = scene {
        cmd.arg("--scene").arg(s);
    }
    match threads {
        Some(t) => cmd.env("DERHAM_THREADS", t),
        None => cmd.env_remove("DERHAM_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn scene(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn default_homotopy_check_is_exact() {
    let o = derham(&["homotopy-check"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["checks"], 100);
    assert_eq!(r["failures"], 0);
    assert!(r["counterexample"].is_null());
}

#[test]
fn empty_homotopy_check_passes() {
    let d = TempDir::new().unwrap();
    let s = scene(&d, "s.json", r#"{"count": 0}"#);
    let o = derham(&["homotopy-check", "--format", "csv"], Some(&s));
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "# seed=0\nindex,n,k,eps,exact\n");
}

#[test]
fn corrupted_homotopy_reports_a_counterexample() {
    let d = TempDir::new().unwrap();
    let s = scene(&d, "s.json", r#"{"count": 10, "fault": "shifted-eps"}"#);
    let o = derham(&["homotopy-check"], Some(&s));
    assert_eq!(code(&o), 3);
    let r = json(&o);
    assert!(r["failures"].as_u64().unwrap() > 0);
    let c = &r["counterexample"];
    assert!(c["form"]["components"].is_array() && c["defect"]["components"].is_array(), "{c}");
}

#[test]
fn annulus_winding_period_is_two_pi() {
    let o = derham(&["periods"], None);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    let periods = r["periods"].as_array().unwrap();
    assert_eq!(periods.len(), 1);
    assert!((num(&periods[0]["value"]).abs() - 2.0 * std::f64::consts::PI).abs() < 1e-6);
    assert_eq!(r["obstruction"], 0);
    assert!(r["primitive"].is_null());
}

#[test]
fn disk_area_form_gets_a_primitive() {
    let d = TempDir::new().unwrap();
    let s = scene(
        &d,
        "s.json",
        r#"{"complex": "disk", "form": {"poly": {"n": 2, "k": 2, "has_t": false,
            "components": [{"I": [0, 1], "poly": [{"exps": [0, 0], "num": 1}]}]}}, "p": 2}"#,
    );
    let o = derham(&["periods"], Some(&s));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert!(r["periods"].as_array().unwrap().is_empty());
    assert_eq!(r["primitive"]["exact"], true);
    assert_eq!(num(&r["primitive"]["max_residual"]), 0.0);
    assert!(num(&r["primitive_norm_ratio"]) > 0.0);
}

#[test]
fn non_cycle_chain_is_an_input_error() {
    let first = json(&derham(&["periods"], None));
    let edge = first["periods"][0]["cycle"][0]["simplex"].clone();
    let d = TempDir::new().unwrap();
    let s = scene(&d, "s.json", &format!(r#"{{"chain": [{{"simplex": {edge}, "coeff": "1"}}]}}"#));
    let o = derham(&["periods"], Some(&s));
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a cycle"));
}

#[test]
fn cone_scans_bracket_the_critical_exponent() {
    for (alpha, p_star) in [("1", 2.0), ("2", 1.5)] {
        let o = derham(&["cone-threshold", "--alpha", alpha, "--m", "1", "--k", "1"], None);
        assert_eq!(code(&o), 0);
        let r = json(&o);
        let b = r["p_star_bracket"].as_array().unwrap();
        let (lo, hi) = (num(&b[0]), num(&b[1]));
        assert!(lo <= p_star && p_star <= hi && hi - lo <= 0.05 + 1e-12, "α = {alpha}: [{lo}, {hi}]");
        assert_eq!(num(&r["p_star"]), p_star);
    }
    let o = derham(&["cone-threshold", "--alpha", "3/2", "--format", "csv"], None);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("# seed=0\np,slope,verdict\n"));
    assert!(csv.lines().skip(2).all(|l| l.split(',').count() == 3));
}

#[test]
fn empty_grid_and_bad_schedule_are_input_errors() {
    assert_eq!(code(&derham(&["cone-threshold", "--p-min", "3", "--p-max", "2"], None)), 2);
    assert_eq!(code(&derham(&["cone-threshold", "--p-step", "0"], None)), 2);
    assert_eq!(code(&derham(&["cone-threshold", "--schedule", "9"], None)), 2);
    assert_eq!(code(&derham(&["cone-threshold", "--alpha", "1/2"], None)), 2);
}

#[test]
fn positive_lift_scenario() {
    let o = derham(&["lift-analyze"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["verdict"], "criterion bounded");
    assert!((num(&r["growth"]["lambda"]) - 1.0).abs() < 0.05);
    assert!((num(&r["growth"]["mu"]) - 5.0).abs() < 0.1);
    // ratio t² along the curve
    for row in r["criterion"]["curve_rows"].as_array().unwrap() {
        let (t, ratio) = (num(&row[1]), num(&row[2]));
        assert!((ratio - t * t).abs() <= 1e-12, "t = {t}: {ratio}");
    }
}

const BAND_CELL: &str = r#"{"lo": [-1, -1], "hi": [1, 1],
    "levels": [{"band": {"lower": {"expr": "0", "lipschitz": 0}, "upper": {"expr": "abs(x1^2 - x2)", "lipschitz": 3}}}]}"#;

#[test]
fn negative_lift_scenario_has_a_witness_curve() {
    let d = TempDir::new().unwrap();
    let s = scene(
        &d,
        "s.json",
        &format!(
            r#"{{"cell": {BAND_CELL}, "base": {{"diagonal": [1, 1]}},
               "criterion": {{"curves": [{{"x": ["t", "t^2 + t^5"], "t": [0.5, 0.1, 0.01]}}]}}}}"#
        ),
    );
    let o = derham(&["lift-analyze"], Some(&s));
    assert_eq!(code(&o), 3);
    let r = json(&o);
    assert_eq!(r["verdict"], "criterion unbounded");
    let w = &r["criterion"]["witness"];
    assert_eq!(w["curve"], 0);
    assert!(num(&w["ratio"]) > 1e3);
}

#[test]
fn radial_lift_scenario() {
    let d = TempDir::new().unwrap();
    let s = scene(&d, "s.json", r#"{"cell": {"lo": [0, 0, 0], "hi": [1, 1, 1]}, "base": {"diagonal": [1, 1, 1]}}"#);
    let o = derham(&["lift-analyze", "--format", "csv"], Some(&s));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&derham(&["lift-analyze"], Some(&s)));
    assert!((num(&r["growth"]["lambda"]) - 1.0).abs() < 0.05);
    assert!((num(&r["growth"]["mu"]) - 3.0).abs() < 0.05);
    assert_eq!(r["verdict"], "no criterion");
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().nth(1), Some("t,sup_norm,inf_det"));
    assert_eq!(csv.lines().count(), 2 + 13);
}

#[test]
fn understated_tower_constant_fails() {
    let d = TempDir::new().unwrap();
    let cell = BAND_CELL.replace(r#""lipschitz": 3"#, r#""lipschitz": 1"#);
    let s = scene(&d, "s.json", &format!(r#"{{"cell": {cell}, "base": {{"custom": ["t*x1", "t^2*x2"]}}}}"#));
    let o = derham(&["lift-analyze"], Some(&s));
    assert_eq!(code(&o), 3);
    let r = json(&o);
    let upper = &r["lipschitz"][1];
    assert_eq!(upper["which"], "upper");
    assert!(num(&upper["check"]["observed"]) > 1.0 && upper["check"]["witness"].is_array());
}

#[test]
fn single_plane_flattening_is_an_isometry() {
    let d = TempDir::new().unwrap();
    let s = scene(&d, "s.json", r#"{"family": "single-plane"}"#);
    let o = derham(&["flatten"], Some(&s));
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["isometry"], true);
}

#[test]
fn tilted_and_cone_families_pass_every_check() {
    let o = derham(&["flatten"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = TempDir::new().unwrap();
    let s = scene(&d, "s.json", r#"{"family": "cone-pair", "lemma_samples": 20000}"#);
    let o = derham(&["flatten"], Some(&s));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["flattened_cone"]["origin_fixed"], true);
    assert!(r["cones"].as_array().unwrap().iter().all(|c| c["graph"]["violations"] == 0));
}

#[test]
fn lying_family_is_reported_with_a_witness() {
    let d = TempDir::new().unwrap();
    let s = scene(&d, "s.json", r#"{"family": "lying-pair"}"#);
    let o = derham(&["flatten"], Some(&s));
    assert_eq!(code(&o), 3);
    let r = json(&o);
    let bad: Vec<&Value> = r["family"]["lipschitz"].as_array().unwrap().iter().filter(|c| num(&c[2]["observed"]) > num(&c[2]["declared"])).collect();
    assert!(!bad.is_empty());
    assert!(bad.iter().all(|c| c[2]["witness"].is_array()));
}

#[test]
fn explicit_family_stages_are_accepted_and_validated() {
    let d = TempDir::new().unwrap();
    let ok = scene(&d, "ok.json", r#"{"family": [{"lambda": [0, 0, 1], "zeta": "0.5*x1", "L": 0.5}], "lemma_samples": 1000}"#);
    assert_eq!(code(&derham(&["flatten"], Some(&ok))), 0);
    let bad = scene(&d, "bad.json", r#"{"family": [{"lambda": [0, 2, 1], "zeta": "0", "L": 0}]}"#);
    assert_eq!(code(&derham(&["flatten"], Some(&bad))), 2);
}

#[test]
fn unknown_fields_and_missing_scenes_are_schema_errors() {
    let d = TempDir::new().unwrap();
    for cmd in ["homotopy-check", "periods", "cone-threshold", "lift-analyze", "flatten"] {
        let s = scene(&d, "s.json", r#"{"no_such_field": 1}"#);
        let o = derham(&[cmd], Some(&s));
        assert_eq!(code(&o), 2, "{cmd}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_field"), "{cmd}");
    }
    assert_eq!(code(&derham(&["periods"], Some(&d.path().join("missing.json")))), 2);
}

#[test]
fn bad_thread_count_is_rejected() {
    assert_eq!(code(&derham_env(&["homotopy-check"], None, Some("zero"))), 2);
    assert_eq!(code(&derham_env(&["homotopy-check"], None, Some("0"))), 2);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let d = TempDir::new().unwrap();
    let lying = scene(&d, "l.json", r#"{"family": "cone-pair", "lemma_samples": 20000}"#);
    let cases: [(&[&str], Option<&Path>); 4] = [
        (&["homotopy-check", "--seed", "7"], None),
        (&["cone-threshold", "--alpha", "2"], None),
        (&["lift-analyze", "--seed", "3"], None),
        (&["flatten", "--seed", "5"], Some(&lying)),
    ];
    for (args, s) in cases {
        let one = derham_env(args, s, Some("1"));
        let four = derham_env(args, s, Some("4"));
        let again = derham_env(args, s, Some("4"));
        assert_eq!(code(&one), 0, "{args:?}");
        assert_eq!(one.stdout, four.stdout, "{args:?}");
        assert_eq!(four.stdout, again.stdout, "{args:?}");
    }
}

#[test]
fn seed_is_echoed_and_files_are_written() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("out");
    let o = derham(&["homotopy-check", "--seed", "42", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["seed"], 42);
    let json_file = fs::read(out.join("homotopy-check.json")).unwrap();
    assert_eq!(json_file, o.stdout);
    let csv = fs::read_to_string(out.join("homotopy-check.csv")).unwrap();
    assert!(csv.starts_with("# seed=42\n"));
    let other = json(&derham(&["homotopy-check", "--seed", "43"], None));
    assert_eq!(other["seed"], 43);
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let o = derham(&["periods", "--format", "csv"], None);
    let csv = String::from_utf8(o.stdout).unwrap();
    let value = csv.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    let mantissa = value.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{value}");
}
