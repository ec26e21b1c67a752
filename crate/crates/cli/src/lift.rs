use derham::exec::Exec;
use derham::lifts::{
    fit_growth_exponents, log_grid, lipschitz_criterion, BaseMap, CellTower, CriterionReport, CriterionSpec, Curve, FunctionDescriptor,
    GrowthFit, GrowthSpec, Level, LipschitzCheck, Retraction,
};
use derham::random::rng;
use serde::{Deserialize, Serialize};

use crate::output::{input, Cell, CliError, Csv, Outcome};

fn default_t_grid() -> Vec<f64> {
    log_grid(1e-3, 1.0, 13)
}

fn default_cloud() -> usize {
    2000
}

/// Band criterion for the first level of the cell, against the base
/// retraction alone.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionScene {
    /// Defaults to the bounds of the first level, which must be a band.
    #[serde(default)]
    pub lower: Option<FunctionDescriptor>,
    #[serde(default)]
    pub upper: Option<FunctionDescriptor>,
    #[serde(default = "default_cloud")]
    pub cloud: usize,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub curves: Vec<Curve>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scene {
    pub cell: CellTower,
    /// Retraction of the base box; it is lifted over every level of `cell`.
    pub base: BaseMap,
    pub cloud: usize,
    pub t_grid: Vec<f64>,
    pub curves: Vec<Curve>,
    pub min_width: f64,
    pub residual_tol: f64,
    /// Pairs per declared Lipschitz constant (0 skips the checks).
    pub lipschitz_pairs: usize,
    /// Absent unless given; only the built-in scene carries one.
    #[serde(default)]
    pub criterion: Option<CriterionScene>,
    pub seed: Option<u64>,
}

fn fd(expr: &str, l: f64) -> FunctionDescriptor {
    FunctionDescriptor::new(expr, l).expect("built-in expression")
}

impl Default for Scene {
    /// The weighted retraction `(t x₁, t² x₂)` of `[−1, 1]²`, lifted over the
    /// band `0 ≤ y ≤ |x₁² − x₂|`.
    fn default() -> Self {
        let t_curve = vec![0.5, 0.3, 0.1, 0.05, 0.02, 0.01];
        let spec = GrowthSpec::on(CellTower::new(vec![-1.0, -1.0], vec![1.0, 1.0]).expect("box"));
        Scene {
            cell: spec.cell.with_level(Level::Band {
                lower: fd("0", 0.0),
                upper: fd("abs(x1^2 - x2)", 3.0),
            }),
            base: BaseMap::Custom(vec![
                derham::expr::Expr::parse("t*x1").expect("built-in expression"),
                derham::expr::Expr::parse("t^2*x2").expect("built-in expression"),
            ]),
            cloud: spec.cloud,
            t_grid: spec.t_grid,
            curves: Vec::new(),
            min_width: spec.min_width,
            residual_tol: spec.residual_tol,
            lipschitz_pairs: 100_000,
            criterion: Some(CriterionScene {
                lower: None,
                upper: None,
                cloud: default_cloud(),
                t_grid: default_t_grid(),
                curves: vec![Curve::new(&["t", "t^2 + t^5"], t_curve).expect("built-in curve")],
            }),
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct DeclaredConstant {
    level: usize,
    which: &'static str,
    check: LipschitzCheck,
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    lipschitz: Vec<DeclaredConstant>,
    growth: GrowthFit,
    verdict: &'static str,
    criterion: Option<CriterionReport>,
}

/// Coordinate box of the first `dims` coordinates of the cell, from the box
/// itself or from cell samples.
fn level_box(cell: &CellTower, dims: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let n0 = cell.base_dim();
    let mut lo = cell.lo.clone();
    let mut hi = cell.hi.clone();
    if dims > n0 {
        lo.resize(dims, f64::INFINITY);
        hi.resize(dims, f64::NEG_INFINITY);
        let mut r = rng(seed);
        for _ in 0..1000 {
            let q = cell.sample(&mut r, 0.0).map_err(input)?;
            for i in n0..dims {
                lo[i] = lo[i].min(q[i]);
                hi[i] = hi[i].max(q[i]);
            }
        }
    }
    Ok((lo, hi))
}

fn declared_constants(cell: &CellTower, pairs: usize, seed: u64) -> Result<Vec<DeclaredConstant>, CliError> {
    let mut out = Vec::new();
    if pairs == 0 {
        return Ok(out);
    }
    let n0 = cell.base_dim();
    for (j, level) in cell.levels.iter().enumerate() {
        let (lo, hi) = level_box(cell, n0 + j, seed)?;
        let fns: Vec<(&'static str, &FunctionDescriptor)> = match level {
            Level::Graph(f) => vec![("graph", f)],
            Level::Band { lower, upper } => vec![("lower", lower), ("upper", upper)],
        };
        for (which, f) in fns {
            let check = f.verify(&lo, &hi, pairs, seed, Exec::default()).map_err(input)?;
            out.push(DeclaredConstant { level: j, which, check });
        }
    }
    Ok(out)
}

pub fn run(scene: Scene, seed: Option<u64>) -> Result<Outcome, CliError> {
    let seed = seed.or(scene.seed).unwrap_or(0);
    let cell = scene.cell;
    if cell.base_dim() != scene.base.dim() {
        return Err(CliError::Input(format!("cell box has dimension {}, base map {}", cell.base_dim(), scene.base.dim())));
    }
    let lipschitz = declared_constants(&cell, scene.lipschitz_pairs, seed)?;
    let base = Retraction {
        base: scene.base,
        levels: Vec::new(),
    };
    let lifted = Retraction {
        base: base.base.clone(),
        levels: cell.levels.clone(),
    };
    let spec = GrowthSpec {
        cell: cell.clone(),
        cloud: scene.cloud,
        t_grid: scene.t_grid,
        curves: scene.curves,
        min_width: scene.min_width,
        residual_tol: scene.residual_tol,
        seed,
        exec: Exec::default(),
    };
    let growth = fit_growth_exponents(&lifted, &spec).map_err(input)?;

    let criterion = match scene.criterion {
        None => None,
        Some(c) => {
            let first = match cell.levels.first() {
                Some(Level::Band { lower, upper }) => Some((lower.clone(), upper.clone())),
                _ => None,
            };
            let (lower, upper) = match (c.lower, c.upper, first) {
                (Some(a), Some(b), _) => (a, b),
                (a, b, Some((la, lb))) => (a.unwrap_or(la), b.unwrap_or(lb)),
                _ => return Err(CliError::Input("criterion needs lower and upper, or a band as the first level".into())),
            };
            let cspec = CriterionSpec {
                cloud: c.cloud,
                lo: cell.lo.clone(),
                hi: cell.hi.clone(),
                t_grid: c.t_grid,
                curves: c.curves,
                seed,
            };
            Some(lipschitz_criterion(&lower, &upper, &base, &cspec, Exec::default()).map_err(input)?)
        }
    };

    let mut problems = Vec::new();
    for d in lipschitz.iter().filter(|d| !d.check.holds()) {
        problems.push(format!(
            "level {} {}: observed Lipschitz quotient {} exceeds declared {}",
            d.level, d.which, d.check.observed, d.check.declared
        ));
    }
    if !growth.power_law {
        problems.push(format!(
            "growth is not a power law (residuals {}, {})",
            growth.lambda_residual, growth.mu_residual
        ));
    }
    let verdict = match &criterion {
        None => "no criterion",
        Some(c) if c.bounded => "criterion bounded",
        Some(c) => {
            problems.push(format!("criterion unbounded: ratio {} at x = {:?}, t = {}", c.witness.ratio, c.witness.x, c.witness.t));
            "criterion unbounded"
        }
    };

    let mut csv = Csv::new(seed, &["t", "sup_norm", "inf_det"]);
    for r in &growth.rows {
        csv.row(&[Cell::F(r.t), Cell::F(r.sup_norm), Cell::F(r.inf_det)]);
    }
    let failure = (!problems.is_empty()).then(|| problems.join("; "));
    let report = Report {
        seed,
        lipschitz,
        growth,
        verdict,
        criterion,
    };
    Outcome::new("lift-analyze", &report, csv, failure)
}
