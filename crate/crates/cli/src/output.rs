use std::fmt::Display;
use std::fs;
use std::path::Path;

use derham::json::fmt_f64;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed scene or arguments the library refuses.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

/// Library errors surface as input errors: they are raised on arguments
/// (dimensions, grids, non-cycles, malformed expressions) before any check.
pub fn input<E: Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read scene {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("scene {}: {e}", path.display())))
}

pub struct Outcome {
    pub name: &'static str,
    pub json: String,
    pub csv: String,
    /// Set when a check failed; the report holds the witness.
    pub failure: Option<String>,
}

impl Outcome {
    pub fn new<T: Serialize>(name: &'static str, report: &T, csv: Csv, failure: Option<String>) -> Result<Self, CliError> {
        let mut json = derham::json::to_string_pretty(report).map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
        json.push('\n');
        Ok(Outcome {
            name,
            json,
            csv: csv.0,
            failure,
        })
    }

    pub fn emit(&self, csv: bool, out: Option<&Path>) -> Result<(), CliError> {
        print!("{}", if csv { &self.csv } else { &self.json });
        if let Some(dir) = out {
            let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
            fs::create_dir_all(dir).map_err(io)?;
            fs::write(dir.join(format!("{}.json", self.name)), &self.json).map_err(io)?;
            fs::write(dir.join(format!("{}.csv", self.name)), &self.csv).map_err(io)?;
        }
        Ok(())
    }
}

/// A CSV table whose first line is `# seed=N`.
pub struct Csv(String);

impl Csv {
    pub fn new(seed: u64, header: &[&str]) -> Self {
        Csv(format!("# seed={seed}\n{}\n", header.join(",")))
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.0.push_str(&line.join(","));
        self.0.push('\n');
    }
}

pub enum Cell {
    F(f64),
    U(usize),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}
