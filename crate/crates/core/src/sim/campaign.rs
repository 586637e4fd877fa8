use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::diagnostics::{calibrate_noise, filter_diagnostics, AnalyticComparison, FilterDiagnostics, NoiseCalibration};
use super::rng::{stage_rng, Stage};
use super::trial::{Scenario, TrialRecord};
use crate::fusion::Hypothesis;
use crate::metrics::{estimate_pfd_vs_snr, estimate_roc, CurveLabel, RocPoint, SnrPoint, SnrSweepRow};
use crate::{Error, Result};

/// Noise samples drawn per kind for the calibration block of the diagnostics.
pub const CALIBRATION_SAMPLES: usize = 100_000;

/// Environment variable consulted for the default worker count.
pub const WORKERS_ENV: &str = "WPDM_WORKERS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; all available cores when `None`.
    pub workers: Option<usize>,
    /// Print one line per completed SNR point to stderr.
    pub progress: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocRow {
    pub label: CurveLabel,
    pub snr_db: f64,
    pub point: RocPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub config_hash: String,
    pub master_seed: u64,
    pub partial: bool,
    pub trials_executed: u64,
    pub failed_trials: Vec<u64>,
    pub filters: Option<FilterDiagnostics>,
    pub noise_calibration: Vec<NoiseCalibration>,
    pub analytic: Vec<AnalyticComparison>,
    pub config: ScenarioConfig,
}

/// Everything a campaign produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub roc: Vec<RocRow>,
    pub sweep: Vec<SnrSweepRow>,
    pub diagnostics: Diagnostics,
}

impl ResultSet {
    /// A result set with no table rows.
    pub fn empty(config: ScenarioConfig) -> Self {
        Self {
            roc: Vec::new(),
            sweep: Vec::new(),
            diagnostics: Diagnostics {
                config_hash: config.hash(),
                master_seed: config.master_seed,
                partial: false,
                trials_executed: 0,
                failed_trials: Vec::new(),
                filters: None,
                noise_calibration: Vec::new(),
                analytic: Vec::new(),
                config,
            },
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.diagnostics.config
    }

    pub fn is_partial(&self) -> bool {
        self.diagnostics.partial
    }

    /// ROC rows of the curve matching `label` at `snr_db`.
    pub fn roc_curve(&self, label: &CurveLabel, snr_db: f64) -> Vec<RocPoint> {
        self.roc
            .iter()
            .filter(|r| r.label == *label && r.snr_db == snr_db)
            .map(|r| r.point.clone())
            .collect()
    }

    pub fn sweep_curve(&self, label: &CurveLabel) -> Vec<SnrSweepRow> {
        self.sweep.iter().filter(|r| r.label == *label).cloned().collect()
    }
}

/// Worker count from an explicit value, then the environment, then all cores.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|w| *w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Fused LLRs per curve and hypothesis at one SNR point.
struct PointSamples {
    h1: Vec<Vec<f64>>,
    h0: Vec<Vec<f64>>,
    analytic_h0: Vec<f64>,
}

impl PointSamples {
    fn new(curves: usize) -> Self {
        Self {
            h1: vec![Vec::new(); curves],
            h0: vec![Vec::new(); curves],
            analytic_h0: vec![0.0; curves],
        }
    }

    fn push(&mut self, record: &TrialRecord) {
        for (c, o) in record.outcomes.iter().enumerate() {
            match record.hypothesis {
                Hypothesis::H1 => self.h1[c].push(o.llr),
                Hypothesis::H0 => {
                    self.h0[c].push(o.llr);
                    self.analytic_h0[c] += o.analytic_pf0;
                }
            }
        }
    }
}

/// Executes every trial of the campaign, in parallel over trials.
///
/// Trial outputs are gathered in trial-id order, so the tables do not depend
/// on the worker count. A panicking trial stops the campaign after the
/// current SNR point and marks the result set as partial.
pub fn run_campaign(config: &ScenarioConfig, options: &RunOptions) -> Result<ResultSet> {
    let scenario = Scenario::new(config.clone())?;
    let workers = resolve_workers(options.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let labels = scenario.labels().to_vec();
    let thresholds = config.threshold_grid();
    let per_point = 2 * config.trials_per_point as u64;

    let mut rs = ResultSet::empty(config.clone());
    let mut points: Vec<Vec<SnrPoint>> = vec![Vec::new(); labels.len()];
    for (snr_index, &snr_db) in config.snr_grid_db.iter().enumerate() {
        let first = snr_index as u64 * per_point;
        let outputs: Vec<std::thread::Result<Result<TrialRecord>>> = pool.install(|| {
            (first..first + per_point)
                .into_par_iter()
                .map(|id| catch_unwind(AssertUnwindSafe(|| scenario.run_trial(id))))
                .collect()
        });
        let mut samples = PointSamples::new(labels.len());
        for (id, out) in (first..).zip(outputs) {
            match out {
                Ok(Ok(record)) => {
                    samples.push(&record);
                    rs.diagnostics.trials_executed += 1;
                }
                Ok(Err(e)) => return Err(e),
                Err(_) => rs.diagnostics.failed_trials.push(id),
            }
        }
        for (c, label) in labels.iter().enumerate() {
            let (h1, h0) = (&samples.h1[c], &samples.h0[c]);
            if h1.is_empty() || h0.is_empty() {
                continue;
            }
            for point in estimate_roc(h1, h0, &thresholds)? {
                rs.roc.push(RocRow {
                    label: *label,
                    snr_db,
                    point,
                });
            }
            let pf0 = h0.iter().filter(|v| **v > 0.0).count() as f64 / h0.len() as f64;
            rs.diagnostics.analytic.push(AnalyticComparison::new(
                label,
                snr_db,
                samples.analytic_h0[c] / h0.len() as f64,
                pf0,
            ));
            points[c].push(SnrPoint {
                snr_db,
                h1: std::mem::take(&mut samples.h1[c]),
                h0: std::mem::take(&mut samples.h0[c]),
            });
        }
        if options.progress {
            eprintln!(
                "snr {snr_db} dB: {} trials, {} curves",
                per_point,
                labels.len()
            );
        }
        if !rs.diagnostics.failed_trials.is_empty() {
            rs.diagnostics.partial = true;
            break;
        }
    }
    for (label, pts) in labels.iter().zip(&points) {
        if !pts.is_empty() {
            rs.sweep.extend(estimate_pfd_vs_snr(*label, pts)?);
        }
    }
    if !config.scalings.is_empty() {
        rs.diagnostics.filters = Some(filter_diagnostics(
            config.filter_length,
            config.vanishing_moments,
            config.bandwidth,
            config.groups,
        )?);
    }
    for (k, kind) in config.noise_kinds.iter().enumerate() {
        let mut rng = stage_rng(config.master_seed, u64::MAX >> 4, Stage::Noise(k as u8));
        rs.diagnostics
            .noise_calibration
            .push(calibrate_noise(&config.noise_spec(*kind, 1.0), CALIBRATION_SAMPLES, &mut rng)?);
    }
    Ok(rs)
}
