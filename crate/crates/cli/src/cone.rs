use clap::Args;
use derham::cone::{critical_exponent, p_grid, scan_threshold, ConeMetric, RadialForm, TruncationSchedule};
use derham::exec::Exec;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::output::{input, Cell, CliError, Csv, Outcome};

/// Command-line values take precedence over the scene.
#[derive(Args)]
pub struct Overrides {
    /// Warping exponent, an integer or a fraction like `3/2`.
    #[arg(long)]
    alpha: Option<String>,
    /// Base torus dimension.
    #[arg(long)]
    m: Option<usize>,
    /// Form degree.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    p_step: Option<f64>,
    /// Truncations ε = 2^-j for j in jmin..=jmax.
    #[arg(long, value_name = "JMIN:JMAX")]
    schedule: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Integer(i64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scene {
    pub alpha: Alpha,
    pub m: usize,
    pub k: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_step: f64,
    pub schedule: String,
    /// Trapezoid points per base axis.
    pub base_points: usize,
    /// Constant pointwise norm of the form on the base.
    pub base_norm: f64,
    pub seed: Option<u64>,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            alpha: Alpha::Integer(1),
            m: 1,
            k: 1,
            p_min: 1.0,
            p_max: 4.0,
            p_step: 0.05,
            schedule: "4:20".into(),
            base_points: TruncationSchedule::default().base_points,
            base_norm: 1.0,
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    alpha: String,
    m: usize,
    k: usize,
    p_star_exact: String,
    p_star: f64,
    p_star_bracket: Option<(f64, f64)>,
    flips: usize,
    rows: Vec<derham::cone::DivergenceReport>,
}

fn parse_alpha(s: &str) -> Result<Rational64, CliError> {
    s.trim().parse().map_err(|_| CliError::Input(format!("alpha {s:?} is not a rational")))
}

fn parse_schedule(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Input(format!("schedule {s:?} is not JMIN:JMAX"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn run(mut scene: Scene, o: &Overrides, seed: Option<u64>) -> Result<Outcome, CliError> {
    let seed = seed.or(scene.seed).unwrap_or(0);
    if let Some(a) = &o.alpha {
        scene.alpha = Alpha::Text(a.clone());
    }
    scene.m = o.m.unwrap_or(scene.m);
    scene.k = o.k.unwrap_or(scene.k);
    scene.p_min = o.p_min.unwrap_or(scene.p_min);
    scene.p_max = o.p_max.unwrap_or(scene.p_max);
    scene.p_step = o.p_step.unwrap_or(scene.p_step);
    if let Some(s) = &o.schedule {
        scene.schedule = s.clone();
    }

    let alpha = match &scene.alpha {
        Alpha::Integer(a) => Rational64::from_integer(*a),
        Alpha::Text(s) => parse_alpha(s)?,
    };
    let metric = ConeMetric::new(alpha, scene.m).map_err(input)?;
    let p_star = critical_exponent(alpha, scene.m, scene.k).map_err(input)?;
    let grid = p_grid(scene.p_min, scene.p_max, scene.p_step).map_err(input)?;
    let (jmin, jmax) = parse_schedule(&scene.schedule)?;
    if scene.base_points < 2 {
        return Err(CliError::Input("base_points must be at least 2".into()));
    }
    let schedule = TruncationSchedule {
        base_points: scene.base_points,
        ..TruncationSchedule::new(jmin, jmax).map_err(input)?
    };
    let form = RadialForm::constant(scene.k, scene.base_norm);
    let scan = scan_threshold(&form, &metric, &grid, &schedule, Exec::default()).map_err(input)?;

    let mut csv = Csv::new(seed, &["p", "slope", "verdict"]);
    for r in &scan.rows {
        csv.row(&[Cell::F(r.p), Cell::F(r.slope), Cell::S(r.verdict.to_string())]);
    }
    let p_star_f = *p_star.numer() as f64 / *p_star.denom() as f64;
    let failure = match scan.bracket {
        None => Some(format!(
            "no convergent-to-divergent flip on [{}, {}] (p* = {p_star})",
            scene.p_min, scene.p_max
        )),
        Some(_) if scan.flips != 1 => Some(format!("verdict flips {} times", scan.flips)),
        Some((lo, hi)) if p_star_f < lo - 1e-9 || p_star_f > hi + 1e-9 => Some(format!("bracket [{lo}, {hi}] misses p* = {p_star}")),
        Some(_) => None,
    };
    let report = Report {
        seed,
        alpha: alpha.to_string(),
        m: scene.m,
        k: scene.k,
        p_star_exact: p_star.to_string(),
        p_star: p_star_f,
        p_star_bracket: scan.bracket,
        flips: scan.flips,
        rows: scan.rows,
    };
    Outcome::new("cone-threshold", &report, csv, failure)
}
