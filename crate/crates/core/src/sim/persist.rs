use std::fs;
use std::path::{Path, PathBuf};

use super::campaign::{Diagnostics, ResultSet};
use super::config::ScenarioConfig;
use crate::{Error, Result};

pub const ROC_FILE: &str = "roc.csv";
pub const SWEEP_FILE: &str = "pfd_vs_snr.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

const ROC_HEADER: [&str; 12] = [
    "scaling", "detector", "noise_kind", "p_imp", "snr_db", "threshold", "pd0", "pf0", "pd0_ci", "pf0_ci",
    "trials_h1", "trials_h0",
];
const SWEEP_HEADER: [&str; 8] = ["scaling", "detector", "noise_kind", "p_imp", "snr_db", "pfd", "pfd_ci", "trials"];

fn persist_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Persist {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_csv<const W: usize>(path: &Path, header: [&str; W], rows: impl Iterator<Item = [String; W]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| persist_err(path, e))?;
    w.write_record(header).map_err(|e| persist_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| persist_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `roc.csv`, `pfd_vs_snr.csv` and `diagnostics.json` into `dir`,
/// creating it when absent. Returns the written paths.
pub fn persist_results(rs: &ResultSet, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let roc_path = dir.join(ROC_FILE);
    write_csv(
        &roc_path,
        ROC_HEADER,
        rs.roc.iter().map(|r| {
            [
                r.label.scaling_name().to_string(),
                r.label.detector.to_string(),
                r.label.noise_kind.to_string(),
                r.label.impulse_probability.to_string(),
                r.snr_db.to_string(),
                r.point.threshold.to_string(),
                r.point.pd0.to_string(),
                r.point.pf0.to_string(),
                r.point.pd0_ci.to_string(),
                r.point.pf0_ci.to_string(),
                r.point.trials_h1.to_string(),
                r.point.trials_h0.to_string(),
            ]
        }),
    )?;
    let sweep_path = dir.join(SWEEP_FILE);
    write_csv(
        &sweep_path,
        SWEEP_HEADER,
        rs.sweep.iter().map(|r| {
            [
                r.label.scaling_name().to_string(),
                r.label.detector.to_string(),
                r.label.noise_kind.to_string(),
                r.label.impulse_probability.to_string(),
                r.snr_db.to_string(),
                r.pfd.to_string(),
                r.pfd_ci.to_string(),
                r.trials.to_string(),
            ]
        }),
    )?;
    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let mut json = serde_json::to_string_pretty(&rs.diagnostics).map_err(|e| persist_err(&diag_path, e))?;
    json.push('\n');
    fs::write(&diag_path, json).map_err(|e| Error::io(&diag_path, e))?;
    Ok(vec![roc_path, sweep_path, diag_path])
}

/// Diagnostics written by [`persist_results`].
pub fn load_diagnostics(dir: &Path) -> Result<Diagnostics> {
    let path = dir.join(DIAGNOSTICS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| persist_err(&path, e))
}

/// Configuration embedded in the diagnostics of a persisted campaign.
pub fn load_config_snapshot(dir: &Path) -> Result<ScenarioConfig> {
    Ok(load_diagnostics(dir)?.config)
}
