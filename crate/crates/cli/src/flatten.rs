use derham::exec::Exec;
use derham::flattening::{
    bilipschitz_estimate, build_flattening, family_catalog, flatten_cone_check, graph_cone_bound, lying_pair, tilted_cone_bound,
    BilipschitzReport, ConeCheck, FamilyReport, FlattenConeReport, MapReport, RegularFamily, StageSpec, TiltedConeCheck, VerifySpec,
};
use serde::{Deserialize, Serialize};

use crate::output::{input, Cell, CliError, Csv, Outcome};

#[derive(Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Named(String),
    Stages(Vec<StageSpec>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scene {
    pub family: FamilySpec,
    /// Its `seed` is replaced by the command seed when one is given.
    pub verify: VerifySpec,
    /// Points per axis of the vertical-line grid.
    pub grid: usize,
    /// Aperture `M` of the input cone around `e₁`.
    pub aperture: f64,
    pub lemma_samples: usize,
    pub seed: Option<u64>,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            family: FamilySpec::Named("tilted-planes".into()),
            verify: VerifySpec::default(),
            grid: 64,
            aperture: 0.9,
            lemma_samples: 100_000,
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct StageCones {
    stage: usize,
    tilted: TiltedConeCheck,
    /// Only for hypersurfaces through the origin.
    graph: Option<ConeCheck>,
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    family: FamilyReport,
    map: MapReport,
    bilipschitz: BilipschitzReport,
    /// Sampled distortion within `tol` of 1.
    isometry: bool,
    cones: Vec<StageCones>,
    /// Only when every hypersurface passes through the origin.
    flattened_cone: Option<FlattenConeReport>,
}

fn named(name: &str) -> Result<RegularFamily, CliError> {
    if name == "lying-pair" {
        return Ok(lying_pair());
    }
    let catalog = family_catalog();
    let names: Vec<&str> = catalog.iter().map(|(n, _)| *n).collect();
    catalog
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f.clone())
        .ok_or_else(|| CliError::Input(format!("unknown family {name:?}; known: {}, lying-pair", names.join(", "))))
}

pub fn run(scene: Scene, seed: Option<u64>) -> Result<Outcome, CliError> {
    let mut verify = scene.verify;
    let seed = seed.or(scene.seed).unwrap_or(verify.seed);
    verify.seed = seed;
    if scene.grid < 2 {
        return Err(CliError::Input("grid must be at least 2".into()));
    }
    let family = match &scene.family {
        FamilySpec::Named(n) => named(n)?,
        FamilySpec::Stages(s) => RegularFamily::new(s.clone()).map_err(input)?,
    };
    let exec = Exec::default();
    let fam_report = family.check(&verify, exec).map_err(input)?;
    let h = build_flattening(family.clone());
    let map = h.verify(&verify, scene.grid, exec).map_err(input)?;
    let bilipschitz = bilipschitz_estimate(&h, &verify, exec).map_err(input)?;
    let isometry = (bilipschitz.c1 - 1.0).abs() <= verify.tol && (bilipschitz.c2 - 1.0).abs() <= verify.tol;

    let n = h.dim() - 1;
    let origin = vec![0.0; n];
    let mut cones = Vec::with_capacity(family.stages.len());
    let mut through_origin = true;
    for (k, s) in family.stages.iter().enumerate() {
        let tilted = tilted_cone_bound(&s.lambda, scene.aperture, scene.lemma_samples, seed, exec).map_err(input)?;
        let at_origin = s.zeta.eval(&origin).map_err(input)?;
        let graph = if at_origin.abs() <= verify.tol {
            Some(graph_cone_bound(&s.zeta, n, scene.aperture, scene.lemma_samples, seed, exec).map_err(input)?)
        } else {
            through_origin = false;
            None
        };
        cones.push(StageCones { stage: k, tilted, graph });
    }
    let flattened_cone = if through_origin {
        Some(flatten_cone_check(&h, scene.aperture, &verify, exec).map_err(input)?)
    } else {
        None
    };

    let mut csv = Csv::new(seed, &["check", "stage", "samples", "violations", "value", "passed"]);
    let mut problems = Vec::new();
    let mut row = |check: &str, stage: String, samples: usize, violations: usize, value: f64, passed: bool, problems: &mut Vec<String>| {
        if !passed {
            problems.push(format!("{check} (stage {stage}) failed, value {value}"));
        }
        csv.row(&[Cell::S(check.into()), Cell::S(stage), Cell::U(samples), Cell::U(violations), Cell::F(value), Cell::B(passed)]);
    };
    let all = String::new;
    let f = &fam_report;
    row("ordering", all(), f.ordering.samples, f.ordering.violations, 0.0, f.ordering.passed(), &mut problems);
    row("family_regions", all(), f.regions.samples, f.regions.violations, 0.0, f.regions.passed(), &mut problems);
    for (k, which, c) in &f.lipschitz {
        row(&format!("lipschitz_{which}"), k.to_string(), c.pairs, usize::from(!c.holds()), c.observed, c.holds(), &mut problems);
    }
    let rt = &map.round_trip;
    row("round_trip", all(), rt.samples, 0, rt.max_error, rt.max_error <= verify.tol, &mut problems);
    row("map_regions", all(), map.regions.samples, map.regions.violations, 0.0, map.regions.passed(), &mut problems);
    row("boundary_jump", all(), 0, 0, map.boundary_jump, map.boundary_jump.is_finite(), &mut problems);
    for v in &map.vertical {
        row("vertical_line", v.stage.to_string(), v.points, v.collisions, v.graph_residual, v.passed, &mut problems);
    }
    let b = &bilipschitz;
    row("bilipschitz_c1", all(), b.pairs, 0, b.c1, !b.degenerate, &mut problems);
    row("bilipschitz_c2", all(), b.pairs, 0, b.c2, b.c2.is_finite(), &mut problems);
    for c in &cones {
        let t = &c.tilted.check;
        row("tilted_cone", c.stage.to_string(), t.samples, t.violations, t.aperture, t.passed(), &mut problems);
        if let Some(g) = &c.graph {
            row("graph_cone", c.stage.to_string(), g.samples, g.violations, g.aperture, g.passed(), &mut problems);
        }
    }
    if let Some(fc) = &flattened_cone {
        row("origin_fixed", all(), 1, usize::from(!fc.origin_fixed), 0.0, fc.origin_fixed, &mut problems);
        for s in &fc.stages {
            row("flattened_cone", s.stage.to_string(), s.samples, s.violations, s.aperture, s.violations == 0, &mut problems);
        }
    }
    let failure = (!problems.is_empty()).then(|| problems.join("; "));
    let report = Report {
        seed,
        family: fam_report,
        map,
        bilipschitz,
        isometry,
        cones,
        flattened_cone,
    };
    Outcome::new("flatten", &report, csv, failure)
}
