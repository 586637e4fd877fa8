use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::DeploymentParams;
use crate::fusion::{Detector, LocalPerformance};
use crate::noise::{NoiseKind, NoiseModelSpec};
use crate::wavelet::{design_prototype_filters, ScalingKind};
use crate::{Error, Result};

fn default_scalings() -> Vec<ScalingKind> {
    ScalingKind::ALL.to_vec()
}

fn default_detectors() -> Vec<Detector> {
    vec![Detector::Mf, Detector::Zf]
}

/// Complete description of a Monte Carlo campaign.
///
/// Serialized as a flat TOML document; every field has a default matching
/// the reference configuration (`Z = 4`, `M = 8`, `N = 64`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Sensor groups `Z`.
    pub groups: usize,
    /// Sensors per group `M`.
    pub sensors: usize,
    /// Fusion-center antennas `N`.
    pub antennas: usize,
    pub scalings: Vec<ScalingKind>,
    /// Detectors applied to every wavelet-coded curve (`mf`, `zf`).
    pub detectors: Vec<Detector>,
    /// Adds the uncoded BPSK + MRC curve.
    pub benchmark: bool,
    pub noise_kinds: Vec<NoiseKind>,
    pub impulse_probability: f64,
    pub gamma: f64,
    pub impulse_index: f64,
    pub bernoulli_probability: f64,
    pub occurrence: f64,
    pub snr_grid_db: Vec<f64>,
    /// Trials per hypothesis at every SNR point.
    pub trials_per_point: usize,
    pub local_detection: f64,
    pub local_false_alarm: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub cluster_width: f64,
    pub cluster_height: f64,
    pub pathloss_exponent: f64,
    pub shadowing_mean_db: f64,
    pub shadowing_std_db: f64,
    /// Symbol interval `T0` in seconds.
    pub symbol_interval: f64,
    pub oversampling: usize,
    /// Receiver timing offset in units of `T0`.
    pub timing_offset: f64,
    /// Explicit fusion thresholds; the default grid is used when absent.
    pub thresholds: Option<Vec<f64>>,
    pub filter_length: usize,
    pub vanishing_moments: usize,
    pub bandwidth: f64,
    /// Half-width of the truncated Shannon pulse, in `T0`.
    pub shannon_extent: f64,
    /// Transmit power scale `rho`; `1 / sqrt(N)` when absent.
    pub power_scale: Option<f64>,
    pub noise_enabled: bool,
    /// Replaces the fading channel by all-ones coefficients.
    pub identity_channel: bool,
    /// Transmits every group simultaneously instead of one per trial.
    pub full_groups: bool,
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let deployment = DeploymentParams::default();
        Self {
            groups: 4,
            sensors: 8,
            antennas: 64,
            scalings: default_scalings(),
            detectors: default_detectors(),
            benchmark: true,
            noise_kinds: vec![NoiseKind::ClassA],
            impulse_probability: 0.3,
            gamma: 0.25,
            impulse_index: 0.1,
            bernoulli_probability: 0.3,
            occurrence: 1.0,
            snr_grid_db: vec![10.0],
            trials_per_point: 1000,
            local_detection: 0.5,
            local_false_alarm: 0.05,
            inner_radius: deployment.inner_radius,
            outer_radius: deployment.outer_radius,
            cluster_width: deployment.cluster_width,
            cluster_height: deployment.cluster_height,
            pathloss_exponent: deployment.pathloss_exponent,
            shadowing_mean_db: deployment.shadowing_mean_db,
            shadowing_std_db: deployment.shadowing_std_db,
            symbol_interval: 1e-3,
            oversampling: crate::coding::DEFAULT_OVERSAMPLING,
            timing_offset: 0.0,
            thresholds: None,
            filter_length: 14,
            vanishing_moments: 2,
            bandwidth: std::f64::consts::SQRT_2,
            shannon_extent: crate::wavelet::DEFAULT_SHANNON_EXTENT,
            power_scale: None,
            noise_enabled: true,
            identity_channel: false,
            full_groups: false,
            master_seed: 0x5eed,
        }
    }
}

/// Line (1-based) on which `key` is assigned in a TOML document.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        line.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl ScenarioConfig {
    /// Parses and validates a TOML document. Errors carry the offending line.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate_keyed().map_err(|(key, message)| {
            Error::Config(match key_line(text, key) {
                Some(line) => format!("line {line}: {message}"),
                None => message,
            })
        })?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_keyed().map_err(|(_, m)| Error::Config(m))
    }

    fn validate_keyed(&self) -> std::result::Result<(), (&'static str, String)> {
        let fail = |key: &'static str, message: String| Err((key, message));
        if self.groups < 2 {
            return fail("groups", format!("groups (Z) must be at least 2, got {}", self.groups));
        }
        if self.sensors < 1 {
            return fail("sensors", "sensors (M) must be at least 1".into());
        }
        if self.antennas < 1 {
            return fail("antennas", "antennas (N) must be at least 1".into());
        }
        if self.trials_per_point < 1 {
            return fail("trials_per_point", "trials_per_point must be at least 1".into());
        }
        if self.scalings.is_empty() && !self.benchmark {
            return fail("scalings", "no curves requested: scalings is empty and benchmark is off".into());
        }
        if !self.scalings.is_empty() && self.detectors.is_empty() {
            return fail("detectors", "detectors must not be empty".into());
        }
        if self.detectors.contains(&Detector::Mrc) {
            return fail("detectors", "mrc is reserved for the benchmark curve; use benchmark = true".into());
        }
        if self.detectors.contains(&Detector::Zf) && self.antennas < self.sensors {
            return fail(
                "antennas",
                format!("zero forcing needs antennas >= sensors, got N = {} < M = {}", self.antennas, self.sensors),
            );
        }
        if self.noise_kinds.is_empty() {
            return fail("noise_kinds", "noise_kinds must not be empty".into());
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return fail("snr_grid_db", "snr_grid_db must be a non-empty list of finite values".into());
        }
        if let Some(t) = &self.thresholds {
            if t.is_empty() || t.iter().any(|v| v.is_nan()) {
                return fail("thresholds", "thresholds must be a non-empty list of numbers".into());
            }
        }
        for (key, p) in [
            ("impulse_probability", self.impulse_probability),
            ("local_detection", self.local_detection),
            ("local_false_alarm", self.local_false_alarm),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return fail(key, format!("{key} must lie in [0, 1], got {p}"));
            }
        }
        if let Err(e) = self.locals() {
            return fail("local_false_alarm", e.to_string());
        }
        for kind in &self.noise_kinds {
            if let Err(e) = self.noise_spec(*kind, 1.0).validate() {
                let key = match e {
                    Error::InvalidProbability { name, .. } => name,
                    _ => "noise_kinds",
                };
                return fail(key, e.to_string());
            }
        }
        if let Err(e) = self.deployment().validate() {
            return fail("inner_radius", e.to_string());
        }
        if !(self.symbol_interval > 0.0 && self.symbol_interval.is_finite()) {
            return fail("symbol_interval", "symbol_interval must be positive".into());
        }
        if self.oversampling < 1 {
            return fail("oversampling", "oversampling must be at least 1".into());
        }
        if self.timing_offset.is_nan() || self.timing_offset.abs() >= crate::coding::MAX_TIMING_OFFSET {
            return fail("timing_offset", format!("timing_offset must satisfy |delta| < 1, got {}", self.timing_offset));
        }
        if !(self.shannon_extent >= 1.0 && self.shannon_extent.is_finite()) {
            return fail("shannon_extent", "shannon_extent must be at least 1".into());
        }
        if let Some(rho) = self.power_scale {
            if !(rho > 0.0 && rho.is_finite()) {
                return fail("power_scale", format!("power_scale must be positive, got {rho}"));
            }
        }
        if !self.scalings.is_empty() {
            if let Err(e) = design_prototype_filters(self.filter_length, self.vanishing_moments, self.bandwidth) {
                let key = match e {
                    Error::OddFilterLength(_) => "filter_length",
                    Error::ZeroCountOutOfRange { .. } => "vanishing_moments",
                    _ => "bandwidth",
                };
                return fail(key, e.to_string());
            }
        }
        Ok(())
    }

    pub fn locals(&self) -> Result<LocalPerformance> {
        LocalPerformance::new(self.local_detection, self.local_false_alarm)
    }

    pub fn deployment(&self) -> DeploymentParams {
        DeploymentParams {
            inner_radius: self.inner_radius,
            outer_radius: self.outer_radius,
            cluster_width: self.cluster_width,
            cluster_height: self.cluster_height,
            pathloss_exponent: self.pathloss_exponent,
            shadowing_mean_db: self.shadowing_mean_db,
            shadowing_std_db: self.shadowing_std_db,
        }
    }

    /// Transmit power scale `rho`.
    pub fn rho(&self) -> f64 {
        self.power_scale.unwrap_or(1.0 / (self.antennas as f64).sqrt())
    }

    /// Noise model of `kind` with Gaussian variance `gaussian_variance`.
    pub fn noise_spec(&self, kind: NoiseKind, gaussian_variance: f64) -> NoiseModelSpec {
        match kind {
            NoiseKind::GaussianOnly => NoiseModelSpec::gaussian(gaussian_variance),
            _ => NoiseModelSpec {
                kind,
                impulse_probability: self.impulse_probability,
                gamma: self.gamma,
                impulse_index: self.impulse_index,
                bernoulli_probability: self.bernoulli_probability,
                occurrence: self.occurrence,
                gaussian_variance,
                sensors: self.sensors,
            },
        }
    }

    pub fn threshold_grid(&self) -> Vec<f64> {
        self.thresholds
            .clone()
            .unwrap_or_else(|| crate::metrics::default_threshold_grid(self.sensors))
    }
}
