//! Command-line frontend for the `wpdm` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::fusion::Detector;
use crate::noise::{NoiseKind, NoiseModelSpec};
use crate::sim::{
    calibrate_noise, filter_diagnostics, persist_results, run_campaign, stage_rng, RunOptions, ScenarioConfig,
    Stage, WORKERS_ENV,
};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Relative variance tolerance of `calibrate-noise`.
pub const CALIBRATION_TOLERANCE: f64 = 0.05;
pub const MIN_CALIBRATION_SAMPLES: usize = 100_000;

pub const PRESETS: [&str; 6] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

#[derive(Debug, Parser)]
#[command(name = "wpdm", version, about = "Monte Carlo simulator for WPDM-aided decision fusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a campaign and write roc.csv, pfd_vs_snr.csv and diagnostics.json.
    Run(CampaignArgs),
    /// ROC tables at a single SNR point.
    Roc {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// SNR of the ROC in dB; the configured grid is used when absent.
        #[arg(long)]
        snr: Option<f64>,
    },
    /// False-detection probability over an SNR grid.
    SweepSnr {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Comma-separated SNR grid in dB.
        #[arg(long, value_delimiter = ',')]
        snr_grid: Option<Vec<f64>>,
    },
    /// Check orthonormality of the prototype filters and the leaf waveforms.
    ValidateFilters(FilterArgs),
    /// Compare generated noise statistics with the mixture formulas.
    CalibrateNoise(NoiseArgs),
    /// Run one of the reference configurations (fig2 .. fig7).
    Preset {
        name: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Output directory, created when absent.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed, overriding the configured one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the WPDM_WORKERS variable, then all cores).
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Trials per hypothesis and SNR point.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CampaignArgs {
    /// Scenario TOML; keys left out keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from a reference configuration instead of the defaults.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Clone)]
pub struct FilterArgs {
    #[arg(long = "q", default_value_t = 14)]
    pub taps: usize,
    #[arg(long = "k", default_value_t = 2)]
    pub zeros: usize,
    #[arg(long = "b", default_value_t = std::f64::consts::SQRT_2)]
    pub bandwidth: f64,
    #[arg(long = "z", default_value_t = 4)]
    pub groups: usize,
    /// Directory for diagnostics.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct NoiseArgs {
    #[arg(long, default_value = "class_a")]
    pub kind: NoiseKind,
    #[arg(long, default_value_t = 0.3)]
    pub p_imp: f64,
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub impulse_index: f64,
    #[arg(long, default_value_t = 0.3)]
    pub bernoulli_probability: f64,
    #[arg(long, default_value_t = 1.0)]
    pub occurrence: f64,
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    #[arg(long, default_value_t = 8)]
    pub sensors: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reference configurations: ROC at 10 dB (`fig2`..`fig4`) and ZF sweeps over
/// both impulsive models (`fig5`..`fig7`) for impulse probabilities 0.3, 0.5
/// and 0.7.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let base = ScenarioConfig::default();
    let roc = |p: f64| ScenarioConfig {
        impulse_probability: p,
        snr_grid_db: vec![10.0],
        trials_per_point: 10_000,
        ..base.clone()
    };
    let sweep = |p: f64| ScenarioConfig {
        impulse_probability: p,
        detectors: vec![Detector::Zf],
        noise_kinds: vec![NoiseKind::ClassA, NoiseKind::BernoulliGaussian],
        snr_grid_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
        trials_per_point: 2_000,
        ..base.clone()
    };
    Some(match name {
        "fig2" => roc(0.3),
        "fig3" => roc(0.5),
        "fig4" => roc(0.7),
        "fig5" => sweep(0.3),
        "fig6" => sweep(0.5),
        "fig7" => sweep(0.7),
        _ => return None,
    })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Trial { source, .. } => exit_code(source),
        Error::Io { .. } | Error::Persist { .. } | Error::RefinementDiverged { .. } => EXIT_RUNTIME,
        Error::DegenerateChannel { .. } | Error::FrameTooShort { .. } | Error::SamplingMismatch(_) => EXIT_RUNTIME,
        _ => EXIT_CONFIG,
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn load_config(args: &CampaignArgs) -> Result<ScenarioConfig, Error> {
    let mut config = match (&args.config, &args.preset) {
        (Some(_), Some(_)) => return Err(Error::Config("--config and --preset are mutually exclusive".into())),
        (Some(path), None) => ScenarioConfig::from_file(path)?,
        (None, Some(name)) => preset(name).ok_or_else(|| unknown_preset(name))?,
        (None, None) => ScenarioConfig::default(),
    };
    apply_overrides(&mut config, &args.common);
    config.validate()?;
    Ok(config)
}

fn unknown_preset(name: &str) -> Error {
    Error::Config(format!("unknown preset {name:?}; expected one of {}", PRESETS.join(", ")))
}

fn apply_overrides(config: &mut ScenarioConfig, common: &CommonArgs) {
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(trials) = common.trials {
        config.trials_per_point = trials;
    }
}

fn execute(config: &ScenarioConfig, common: &CommonArgs) -> i32 {
    let options = RunOptions {
        workers: common.workers,
        progress: true,
    };
    let rs = match run_campaign(config, &options) {
        Ok(rs) => rs,
        Err(e) => return fail(&e),
    };
    match persist_results(&rs, &common.out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => return fail(&e),
    }
    if rs.is_partial() {
        eprintln!(
            "error: {} trial(s) panicked; results are partial",
            rs.diagnostics.failed_trials.len()
        );
        return EXIT_RUNTIME;
    }
    EXIT_OK
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Persist {
        path: path.clone(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn validate_filters(args: &FilterArgs) -> i32 {
    let report = match filter_diagnostics(args.taps, args.zeros, args.bandwidth, args.groups) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    println!("regularity order K0       {}", report.regularity_order);
    println!("orthonormality residual   {:.3e} (seed {:.3e})", report.orthonormality_residual, report.seed_orthonormality_residual);
    println!(
        "max leaf cross-correlation {:.3e} (seed {:.3e})",
        report.max_leaf_cross_correlation, report.seed_max_leaf_cross_correlation
    );
    println!("tolerance                 {}", report.tolerance);
    if let Some(dir) = &args.out {
        if let Err(e) = write_json(dir, crate::sim::DIAGNOSTICS_FILE, &report) {
            return fail(&e);
        }
    }
    if report.within_tolerance {
        EXIT_OK
    } else {
        eprintln!("error: filter residuals exceed tolerance {}", report.tolerance);
        EXIT_CONFIG
    }
}

fn calibrate(args: &NoiseArgs) -> i32 {
    if args.samples < MIN_CALIBRATION_SAMPLES {
        return fail(&Error::Config(format!(
            "calibration needs at least {MIN_CALIBRATION_SAMPLES} samples, got {}",
            args.samples
        )));
    }
    let spec = match args.kind {
        NoiseKind::GaussianOnly => NoiseModelSpec::gaussian(args.variance),
        kind => NoiseModelSpec {
            kind,
            impulse_probability: args.p_imp,
            gamma: args.gamma,
            impulse_index: args.impulse_index,
            bernoulli_probability: args.bernoulli_probability,
            occurrence: args.occurrence,
            gaussian_variance: args.variance,
            sensors: args.sensors,
        },
    };
    if let Err(e) = spec.validate() {
        return fail(&e);
    }
    let mut rng = stage_rng(args.seed, 0, Stage::Calibration);
    let report = match calibrate_noise(&spec, args.samples, &mut rng) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    println!("kind                 {}", report.kind);
    println!("empirical variance   {:.6}", report.empirical_variance);
    println!("mixture variance     {:.6}", report.mixture_variance);
    println!("relative error       {:.4}", report.relative_error);
    println!("excess kurtosis      {:.4}", report.excess_kurtosis);
    println!("closed-form variance {:.6}", report.closed_form_variance);
    if let Some(dir) = &args.out {
        if let Err(e) = write_json(dir, "noise_calibration.json", &report) {
            return fail(&e);
        }
    }
    let kurtosis_ok = args.kind != NoiseKind::GaussianOnly || report.excess_kurtosis.abs() <= CALIBRATION_TOLERANCE;
    if report.relative_error <= CALIBRATION_TOLERANCE && kurtosis_ok {
        EXIT_OK
    } else {
        eprintln!(
            "error: measured variance {:.6} (kurtosis {:.4}) vs expected {:.6}",
            report.empirical_variance, report.excess_kurtosis, report.mixture_variance
        );
        EXIT_CONFIG
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => match load_config(&args) {
            Ok(config) => execute(&config, &args.common),
            Err(e) => fail(&e),
        },
        Command::Roc { campaign, snr } => match load_config(&campaign) {
            Ok(mut config) => {
                if let Some(snr) = snr {
                    config.snr_grid_db = vec![snr];
                }
                execute(&config, &campaign.common)
            }
            Err(e) => fail(&e),
        },
        Command::SweepSnr { campaign, snr_grid } => match load_config(&campaign) {
            Ok(mut config) => {
                if let Some(grid) = snr_grid {
                    config.snr_grid_db = grid;
                    if let Err(e) = config.validate() {
                        return fail(&e);
                    }
                }
                execute(&config, &campaign.common)
            }
            Err(e) => fail(&e),
        },
        Command::ValidateFilters(args) => validate_filters(&args),
        Command::CalibrateNoise(args) => calibrate(&args),
        Command::Preset { name, common } => match preset(&name) {
            Some(mut config) => {
                apply_overrides(&mut config, &common);
                match config.validate() {
                    Ok(()) => execute(&config, &common),
                    Err(e) => fail(&e),
                }
            }
            None => fail(&unknown_preset(&name)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        let fig2 = preset("fig2").unwrap();
        assert_eq!((fig2.groups, fig2.sensors, fig2.antennas), (4, 8, 64));
        assert_eq!(fig2.impulse_probability, 0.3);
        assert_eq!(fig2.snr_grid_db, vec![10.0]);
        assert!(preset("fig8").is_none());
    }

    #[test]
    fn filter_validation_exit_codes() {
        assert_eq!(run(["wpdm", "validate-filters", "--q", "14", "--k", "2", "--z", "4"]), EXIT_OK);
        assert_eq!(run(["wpdm", "validate-filters", "--q", "14", "--k", "1", "--b", "4", "--z", "4"]), EXIT_CONFIG);
        assert_eq!(run(["wpdm", "validate-filters", "--q", "2", "--k", "1", "--b", "1", "--z", "2"]), EXIT_OK);
    }

    #[test]
    fn calibration_rejects_bad_probability() {
        assert_eq!(run(["wpdm", "calibrate-noise", "--p-imp", "1.5"]), EXIT_CONFIG);
        assert_eq!(run(["wpdm", "calibrate-noise", "--samples", "10"]), EXIT_CONFIG);
    }

    #[test]
    fn usage_errors_are_config_failures() {
        assert_eq!(run(["wpdm", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["wpdm", "preset", "fig9"]), EXIT_CONFIG);
    }
}
