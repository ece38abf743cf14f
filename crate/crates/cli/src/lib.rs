//! Library side of the `formation-forge` command: scenario loading,
//! experiment dispatch and artifact writing.

pub mod error;
pub mod experiments;
pub mod format;
pub mod scenario;

use std::path::{Path, PathBuf};

pub use error::CliError;
pub use experiments::{Overrides, Report};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Loads `scenario`, runs its experiment and writes `<name>.csv` and
/// `<name>.txt` into `out_dir`.
pub fn run(scenario: &Path, out_dir: &Path, ov: Overrides) -> Result<RunOutput, CliError> {
    if let Some(t) = ov.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Invalid(format!("--tol must be positive, got {t}")));
        }
    }
    let loaded = scenario::load(scenario)?;
    let mut report = experiments::run(&loaded, ov)?;
    let name = loaded.output_name();
    report.summary = format!(
        "scenario: {name} ({})\n{}",
        loaded.scenario.experiment.name(),
        report.summary
    );
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let csv_path = out_dir.join(format!("{name}.csv"));
    let summary_path = out_dir.join(format!("{name}.txt"));
    report.table.write(&csv_path)?;
    std::fs::write(&summary_path, &report.summary).map_err(|source| CliError::Write {
        path: summary_path.clone(),
        source,
    })?;
    Ok(RunOutput {
        report,
        csv_path,
        summary_path,
    })
}
