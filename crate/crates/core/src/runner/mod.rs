//! Scenario configs, execution, file output and the acceptance self-test.

pub mod acceptance;
pub mod config;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Error;
use config::{Format, Scenario, ScenarioConfig};
use output::{rows_from_spectrum, write_json, write_summary, write_table, OutputError};
pub use scenario::{run_scenario, ScenarioOutput};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{context}: {source}")]
    Scenario { context: String, source: Error },
    #[error(transparent)]
    Output(#[from] OutputError),
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'static str,
    config: &'a ScenarioConfig,
    report: &'a serde_json::Value,
}

/// Write the scenario's tables to `path` (a file, or a directory for
/// sweeps). Returns the files written.
///
/// Single-spectrum scenarios write one table. Sweeps write one table per
/// separation plus `summary.csv`. `predict` has no table and writes its
/// report as JSON.
pub fn write_outputs(
    cfg: &ScenarioConfig,
    out: &ScenarioOutput,
    path: &Path,
    format: Format,
) -> Result<Vec<PathBuf>, RunError> {
    let meta = Metadata { version: VERSION, config: cfg, report: &out.report };
    let mut written = Vec::new();
    match out.scenario {
        Scenario::SweepSeparation => {
            std::fs::create_dir_all(path).map_err(|e| OutputError::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            for s in &out.spectra {
                let file = path.join(format!("{}.{}", s.label, format.extension()));
                write_table(&file, &rows_from_spectrum(&s.spectrum), format, &meta)?;
                written.push(file);
            }
            if let Some(rows) = &out.summary {
                let file = path.join("summary.csv");
                write_summary(&file, rows)?;
                written.push(file);
            }
        }
        Scenario::Predict | Scenario::Selftest => {
            write_json(path, &meta)?;
            written.push(path.to_path_buf());
        }
        _ => {
            let s = out.spectra.first().expect("spectrum scenarios produce one spectrum");
            write_table(path, &rows_from_spectrum(&s.spectrum), format, &meta)?;
            written.push(path.to_path_buf());
        }
    }
    Ok(written)
}
