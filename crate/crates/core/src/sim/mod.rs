//! Scenario configuration, the per-trial pipeline, parallel campaigns and
//! result persistence.

mod campaign;
mod config;
mod diagnostics;
mod persist;
mod rng;
mod trial;

pub use campaign::{
    resolve_workers, run_campaign, Diagnostics, ResultSet, RocRow, RunOptions, CALIBRATION_SAMPLES, WORKERS_ENV,
};
pub use config::ScenarioConfig;
pub use diagnostics::{
    calibrate_noise, filter_diagnostics, AnalyticComparison, FilterDiagnostics, NoiseCalibration,
    CROSS_CORRELATION_SHIFTS,
};
pub use persist::{
    load_config_snapshot, load_diagnostics, persist_results, DIAGNOSTICS_FILE, ROC_FILE, SWEEP_FILE,
};
pub use rng::{stage_rng, Stage};
pub use trial::{generate_local_decisions, run_trial, CurveOutcome, Scenario, TrialIndex, TrialRecord};
