//! Linear multi-antenna detectors and log-likelihood-ratio decision fusion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::coding::RecoveredFrame;
use crate::{Error, Result};

/// Per-term LLR clamp.
pub const LLR_CLAMP: f64 = 50.0;
const MIN_DIAGONAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    /// Matched filter on the wavelet-packet statistics.
    Mf,
    /// Zero forcing (diagonal `D` inverse) on the wavelet-packet statistics.
    Zf,
    /// Maximal ratio combining of uncoded BPSK, the no-WPDM benchmark.
    Mrc,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Detector::Mf => "mf",
            Detector::Zf => "zf",
            Detector::Mrc => "mrc",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" => Ok(Detector::Mf),
            "zf" => Ok(Detector::Zf),
            "mrc" => Ok(Detector::Mrc),
            other => Err(Error::Config(format!("unknown detector '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Detection and false-alarm probabilities of a single sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalPerformance {
    pub detection: f64,
    pub false_alarm: f64,
}

impl LocalPerformance {
    pub fn new(detection: f64, false_alarm: f64) -> Result<Self> {
        for (name, value) in [("detection", detection), ("false_alarm", false_alarm)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        if false_alarm >= detection {
            return Err(Error::Config(format!(
                "local false-alarm probability {false_alarm} must be below detection probability {detection}"
            )));
        }
        Ok(Self {
            detection,
            false_alarm,
        })
    }
}

impl Default for LocalPerformance {
    fn default() -> Self {
        Self {
            detection: 0.5,
            false_alarm: 0.05,
        }
    }
}

/// Parameters of the per-sensor Gaussian statistic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticModel {
    pub antennas: usize,
    pub power_scale: f64,
    /// Combined noise variance `sigma_e^2`.
    pub noise_variance: f64,
}

impl StatisticModel {
    /// Mean and variance of `psi(r | x)`.
    pub fn moments(&self, detector: Detector, x: f64, d: f64) -> Result<(f64, f64)> {
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NonPositiveVariance(d));
        }
        let n = self.antennas as f64;
        let amp = self.power_scale.sqrt();
        let (mean, var) = match detector {
            Detector::Mf | Detector::Mrc => (n * d * amp * x, self.noise_variance * n * d),
            Detector::Zf => (n * amp * x, n * self.noise_variance / d),
        };
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::NonPositiveVariance(var));
        }
        Ok((mean, var))
    }
}

/// Gaussian density `psi(r | x)`: MF `N(N d sqrt(rho) x, sigma_e^2 N d)`,
/// ZF `N(N sqrt(rho) x, N sigma_e^2 / d)`.
pub fn conditional_pdf(r: f64, x: f64, detector: Detector, d: f64, model: &StatisticModel) -> Result<f64> {
    let (mean, var) = model.moments(detector, x, d)?;
    let z = r - mean;
    Ok((-(z * z) / (2.0 * var)).exp() / (std::f64::consts::TAU * var).sqrt())
}

/// Detector output for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionStatistic {
    pub detector: Detector,
    pub r: Vec<f64>,
    /// Diagonal of `D = (1/N) (G sigma)^H (G sigma)`.
    pub d: Vec<f64>,
    pub llr: f64,
}

/// Real-valued per-sensor statistics and the diagonal of `D`.
///
/// With effective channel `a_m = g_m * gain`: MF `r_m = Re{a_m^H y_m}`, ZF
/// `r_m = Re{a_m^H y_m} / d_m`, where `y_m` is the antenna vector of slot `m`.
/// `Mrc` is the MF form applied to uncoded slots.
pub fn detect(
    recovered: &RecoveredFrame,
    channel: &ChannelRealization,
    gain: f64,
    detector: Detector,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n_ant, m_sens) = (channel.antennas, channel.sensors);
    if recovered.antennas != n_ant || recovered.sensors != m_sens {
        return Err(Error::DimensionMismatch(format!(
            "recovered frame is {} x {}, channel is {n_ant} x {m_sens}",
            recovered.antennas, recovered.sensors
        )));
    }
    if detector == Detector::Zf && n_ant < m_sens {
        return Err(Error::DimensionMismatch(format!(
            "zero forcing needs N >= M, got N = {n_ant}, M = {m_sens}"
        )));
    }
    let mut r = Vec::with_capacity(m_sens);
    let mut d = Vec::with_capacity(m_sens);
    for m in 0..m_sens {
        let mut corr = 0.0;
        let mut energy = 0.0;
        for n in 0..n_ant {
            let a = channel.coefficient(n, m) * gain;
            corr += (a.conj() * recovered.get(n, m)).re;
            energy += a.norm_sqr();
        }
        let dm = energy / n_ant as f64;
        if dm < MIN_DIAGONAL {
            return Err(Error::DegenerateChannel { sensor: m, value: dm });
        }
        d.push(dm);
        r.push(match detector {
            Detector::Zf => corr / dm,
            Detector::Mf | Detector::Mrc => corr,
        });
    }
    Ok((r, d))
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// Per-sensor LLR terms, each clamped to `[-LLR_CLAMP, LLR_CLAMP]`.
pub fn llr_terms(
    r: &[f64],
    d: &[f64],
    locals: &LocalPerformance,
    detector: Detector,
    model: &StatisticModel,
) -> Result<Vec<f64>> {
    if r.len() != d.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} statistics but {} diagonal gains",
            r.len(),
            d.len()
        )));
    }
    let (pd, pf) = (locals.detection, locals.false_alarm);
    let (ln_pd, ln_qd) = (pd.ln(), (1.0 - pd).ln());
    let (ln_pf, ln_qf) = (pf.ln(), (1.0 - pf).ln());
    r.iter()
        .zip(d)
        .map(|(&rm, &dm)| {
            let (mu_p, var) = model.moments(detector, 1.0, dm)?;
            let (mu_n, _) = model.moments(detector, -1.0, dm)?;
            // shared normalization cancels in the ratio
            let lp = -(rm - mu_p).powi(2) / (2.0 * var);
            let ln = -(rm - mu_n).powi(2) / (2.0 * var);
            let num = log_sum_exp(lp + ln_pd, ln + ln_qd);
            let den = log_sum_exp(lp + ln_pf, ln + ln_qf);
            let term = num - den;
            Ok(if term.is_nan() { 0.0 } else { term.clamp(-LLR_CLAMP, LLR_CLAMP) })
        })
        .collect()
}

/// `Lambda = sum_m ln[(psi(r|+1) P_D + psi(r|-1)(1-P_D)) / (psi(r|+1) P_F + psi(r|-1)(1-P_F))]`.
pub fn llr_fusion(
    r: &[f64],
    d: &[f64],
    locals: &LocalPerformance,
    detector: Detector,
    model: &StatisticModel,
) -> Result<f64> {
    Ok(llr_terms(r, d, locals, detector, model)?.iter().sum())
}

/// `H1` iff `llr > threshold`.
pub fn global_decision(llr: f64, threshold: f64) -> Hypothesis {
    if llr > threshold {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// Detection plus fusion in one step.
pub fn fuse(
    recovered: &RecoveredFrame,
    channel: &ChannelRealization,
    gain: f64,
    detector: Detector,
    locals: &LocalPerformance,
    model: &StatisticModel,
) -> Result<FusionStatistic> {
    let (r, d) = detect(recovered, channel, gain, detector)?;
    let llr = llr_fusion(&r, &d, locals, detector, model)?;
    Ok(FusionStatistic { detector, r, d, llr })
}

/// No-WPDM benchmark: MRC on correlator outputs of uncoded BPSK slots, then
/// the same LLR fusion.
pub fn benchmark_mrc(
    recovered: &RecoveredFrame,
    channel: &ChannelRealization,
    gain: f64,
    locals: &LocalPerformance,
    model: &StatisticModel,
) -> Result<FusionStatistic> {
    fuse(recovered, channel, gain, Detector::Mrc, locals, model)
}
