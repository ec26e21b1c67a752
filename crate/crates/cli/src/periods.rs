use std::sync::Arc;

use derham::catalog;
use derham::cech::{global_primitive, integrate_over_cycle, winding, zigzag, CechError, LocalForm, PrimitiveOptions, ZigzagOptions};
use derham::forms::PolyForm;
use derham::simplicial::{homology, star_cover, Chain, ComplexJson};
use serde::{Deserialize, Serialize};

use crate::output::{input, Cell, CliError, Csv, Outcome};

#[derive(Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Named(String),
    Explicit(ComplexJson),
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoverKind {
    #[default]
    Star,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormSpec {
    Winding,
    Poly(PolyForm),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scene {
    pub complex: ComplexSpec,
    pub cover: CoverKind,
    pub form: FormSpec,
    pub p: f64,
    /// Extra nerve cycle to integrate over, after the homology basis.
    pub chain: Option<Chain>,
    /// Randomizes the rung choices of the descent.
    pub gauge_seed: Option<u64>,
    /// Periods below this count as zero for numeric forms.
    pub period_tol: f64,
    pub norm_samples: usize,
    pub seed: Option<u64>,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            complex: ComplexSpec::Named("annulus".into()),
            cover: CoverKind::Star,
            form: FormSpec::Winding,
            p: 2.0,
            chain: None,
            gauge_seed: None,
            period_tol: 1e-6,
            norm_samples: 256,
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct PeriodRow {
    source: &'static str,
    cycle: Chain,
    value: f64,
    exact: Option<String>,
}

#[derive(Serialize)]
struct Piece {
    facet: Vec<usize>,
    /// `None` for numeric pieces.
    form: Option<PolyForm>,
}

#[derive(Serialize)]
struct Primitive {
    degree: usize,
    exact: bool,
    max_residual: f64,
    p: f64,
    pieces: Vec<Piece>,
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    degree: usize,
    periods: Vec<PeriodRow>,
    /// First cycle with a nonzero period, the certificate that no global
    /// primitive exists.
    obstruction: Option<usize>,
    primitive_norm_ratio: Option<f64>,
    primitive: Option<Primitive>,
}

pub fn run(scene: Scene, seed: Option<u64>) -> Result<Outcome, CliError> {
    let seed = seed.or(scene.seed).unwrap_or(0);
    let complex = match &scene.complex {
        ComplexSpec::Named(name) => catalog::by_name(name).ok_or_else(|| CliError::Input(format!("unknown complex {name:?}; known: {}", catalog::NAMES.join(", "))))?,
        ComplexSpec::Explicit(json) => Arc::new(json.build().map_err(input)?),
    };
    if !(scene.p >= 1.0) {
        return Err(CliError::Input(format!("p = {} must be at least 1", scene.p)));
    }
    let cover = match scene.cover {
        CoverKind::Star => star_cover(complex),
    };
    let nerve = cover.nerve();
    let form = match scene.form {
        FormSpec::Winding => winding(),
        FormSpec::Poly(w) => LocalForm::Poly(w),
    };
    let degree = form.degree();
    let zopts = ZigzagOptions {
        gauge_seed: scene.gauge_seed,
        seed,
        ..ZigzagOptions::default()
    };
    let state = zigzag(&form, &cover, &zopts).map_err(input)?;

    let mut cycles: Vec<(&'static str, Chain)> = homology(&nerve, degree).cycles.into_iter().map(|c| ("homology", c)).collect();
    if let Some(c) = scene.chain {
        cycles.push(("scene", c));
    }
    let mut periods = Vec::with_capacity(cycles.len());
    let mut csv = Csv::new(seed, &["cycle", "value", "exact"]);
    for (i, (source, cycle)) in cycles.into_iter().enumerate() {
        let p = integrate_over_cycle(&state, &cycle, &nerve).map_err(input)?;
        let exact = p.exact.as_ref().map(|q| q.to_string());
        csv.row(&[Cell::U(i), Cell::F(p.value), Cell::S(exact.clone().unwrap_or_default())]);
        periods.push(PeriodRow {
            source,
            cycle,
            value: p.value,
            exact,
        });
    }
    let vanishes = |r: &PeriodRow| match &r.exact {
        Some(q) => q == "0",
        None => r.value.abs() <= scene.period_tol,
    };
    let obstruction = periods.iter().position(|r| !vanishes(r));

    let mut failure = None;
    let mut primitive = None;
    if obstruction.is_none() {
        let opts = PrimitiveOptions {
            zigzag: zopts,
            p: scene.p,
            norm_samples: scene.norm_samples,
            period_tol: scene.period_tol,
            seed,
            ..PrimitiveOptions::default()
        };
        match global_primitive(&form, &cover, &opts) {
            Ok(g) => {
                primitive = Some((
                    g.norm_ratio,
                    Primitive {
                        degree: g.degree,
                        exact: g.exact,
                        max_residual: g.max_residual,
                        p: g.p,
                        pieces: g
                            .pieces
                            .into_iter()
                            .map(|(facet, f)| Piece {
                                facet,
                                form: match f {
                                    LocalForm::Poly(w) => Some(w),
                                    LocalForm::Numeric(_) => None,
                                },
                            })
                            .collect(),
                    },
                ))
            }
            // the basis periods vanished but another cycle does not: report it
            Err(CechError::NonzeroPeriod { cycle, period }) => {
                failure = Some(format!("nonzero period {period} over {cycle} after the basis periods vanished"));
                csv.row(&[Cell::U(periods.len()), Cell::F(period), Cell::S(String::new())]);
                periods.push(PeriodRow {
                    source: "primitive",
                    cycle,
                    value: period,
                    exact: None,
                });
            }
            Err(e) => return Err(input(e)),
        }
    }
    let (primitive_norm_ratio, primitive) = match primitive {
        Some((ratio, p)) => (ratio, Some(p)),
        None => (None, None),
    };
    let report = Report {
        seed,
        degree,
        periods,
        obstruction,
        primitive_norm_ratio,
        primitive,
    };
    Outcome::new("periods", &report, csv, failure)
}
