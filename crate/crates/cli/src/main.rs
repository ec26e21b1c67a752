//! `derham`: reproducible experiments over the derham library.
//!
//! Every subcommand reads an optional JSON scene (unknown fields are
//! rejected), runs its checks and writes a JSON report or a CSV table. The
//! seed used is echoed in both. Exit codes: 0 when every check passes, 2 for
//! scene or input errors, 3 when a check fails (the report then carries a
//! witness), 1 for I/O failures.

mod cone;
mod flatten;
mod homotopy;
mod lift;
mod output;
mod periods;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{CliError, Outcome};

#[derive(Parser)]
#[command(name = "derham", version, about = "Exact and sampled checks for L^p De Rham constructions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON scene file; built-in defaults are used without one.
    #[arg(long, global = true, value_name = "FILE")]
    scene: Option<PathBuf>,
    /// Overrides the scene seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Also write `<command>.json` and `<command>.csv` into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Format written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Random exact checks of d∘K + K∘d = id − r_ε^* for the radial homotopy.
    ///
    /// Scene: {count, max_n, max_k, max_degree, eps: ["0", "1/2"], seed,
    /// fault: "shifted-eps"}. CSV columns: index,n,k,eps,exact.
    HomotopyCheck,
    /// Periods of a closed form over the nerve homology basis, and a global
    /// primitive when they all vanish.
    ///
    /// Scene: {complex: name | {vertices, simplices}, cover: "star",
    /// form: "winding" | {"poly": form}, p, chain, gauge_seed, seed}.
    /// CSV columns: cycle,value,exact.
    Periods,
    /// Scans p for divergence of a radially constant form on a cone metric.
    ///
    /// CSV columns: p,slope,verdict. The JSON summary holds p_star_exact and
    /// p_star_bracket.
    ConeThreshold(cone::Overrides),
    /// Lifts a base retraction over a cell tower, fits derivative growth
    /// exponents and evaluates the band criterion.
    ///
    /// Scene: {cell, base, cloud, t_grid, curves, min_width, residual_tol,
    /// lipschitz_pairs, criterion, seed}. CSV columns: t,sup_norm,inf_det.
    LiftAnalyze,
    /// Checks a regular family of hypersurfaces, its flattening map and the
    /// cone-containment bounds.
    ///
    /// Scene: {family: name | [stages], verify, grid, aperture,
    /// lemma_samples, seed}. CSV columns: check,stage,samples,violations,value,passed.
    Flatten,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DERHAM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Input(format!("DERHAM_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    init_threads()?;
    let c = &cli.common;
    let scene = c.scene.as_deref();
    match &cli.command {
        Command::HomotopyCheck => homotopy::run(output::load(scene)?, c.seed),
        Command::Periods => periods::run(output::load(scene)?, c.seed),
        Command::ConeThreshold(o) => cone::run(output::load(scene)?, o, c.seed),
        Command::LiftAnalyze => lift::run(output::load(scene)?, c.seed),
        Command::Flatten => flatten::run(output::load(scene)?, c.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|o| {
        o.emit(cli.common.format == Format::Csv, cli.common.out.as_deref())?;
        Ok(o)
    });
    match outcome {
        Ok(o) if o.failure.is_none() => ExitCode::SUCCESS,
        Ok(o) => {
            eprintln!("check failed: {}", o.failure.unwrap_or_default());
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
