use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{sinc, Error, Result};

/// Default truncation of the Shannon pulse, `|x| <= 16`.
pub const DEFAULT_SHANNON_EXTENT: f64 = 16.0;
pub const DEFAULT_GRID_STEP: f64 = 1.0 / 64.0;
const MAX_AUTOCORRELATION_STEP: f64 = 1.0 / 8.0;

/// Root scaling function of the packet tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingKind {
    /// `1` on `[0, 1)`.
    Haar,
    /// `sinc(x)`, truncated.
    Shannon,
    /// Piecewise linear spline (hat), `1 - |x|` on `[-1, 1]`.
    Spline,
}

impl ScalingKind {
    pub const ALL: [ScalingKind; 3] = [ScalingKind::Haar, ScalingKind::Shannon, ScalingKind::Spline];

    /// Untruncated value at `x` (in `T0`).
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ScalingKind::Haar => {
                if (0.0..1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            ScalingKind::Shannon => sinc(x),
            ScalingKind::Spline => (1.0 - x.abs()).max(0.0),
        }
    }

    /// Support with the given Shannon truncation.
    pub fn support(self, shannon_extent: f64) -> (f64, f64) {
        match self {
            ScalingKind::Haar => (0.0, 1.0),
            ScalingKind::Shannon => (-shannon_extent, shannon_extent),
            ScalingKind::Spline => (-1.0, 1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScalingKind::Haar => "haar",
            ScalingKind::Shannon => "shannon",
            ScalingKind::Spline => "spline",
        }
    }
}

impl fmt::Display for ScalingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(ScalingKind::Haar),
            "shannon" | "sinc" => Ok(ScalingKind::Shannon),
            "spline" | "linear" | "hat" => Ok(ScalingKind::Spline),
            other => Err(Error::Config(format!("unknown scaling function '{other}'"))),
        }
    }
}

/// A root scaling function sampled on a uniform grid over `[t_min, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFunction {
    pub kind: ScalingKind,
    pub samples: Vec<f64>,
    pub grid_step: f64,
    pub support: (f64, f64),
}

pub fn sample_scaling_function(
    kind: ScalingKind,
    grid_step: f64,
    extent: (f64, f64),
) -> Result<ScalingFunction> {
    let (t_min, t_max) = extent;
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidGrid(format!("grid step {grid_step} must be positive")));
    }
    if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
        return Err(Error::InvalidGrid(format!("empty extent [{t_min}, {t_max}]")));
    }
    if kind != ScalingKind::Shannon {
        let (lo, hi) = kind.support(0.0);
        if t_min > lo || t_max < hi {
            return Err(Error::InvalidGrid(format!(
                "extent [{t_min}, {t_max}] does not cover the {kind} support [{lo}, {hi}]"
            )));
        }
    }
    let count = ((t_max - t_min) / grid_step + 1e-9).floor() as usize + 1;
    let samples = (0..count)
        .map(|i| kind.eval(t_min + i as f64 * grid_step))
        .collect();
    Ok(ScalingFunction {
        kind,
        samples,
        grid_step,
        support: extent,
    })
}

impl ScalingFunction {
    /// Sampled at [`DEFAULT_GRID_STEP`] over the natural support, with the
    /// Shannon pulse truncated at `shannon_extent`.
    pub fn standard(kind: ScalingKind, shannon_extent: f64) -> Result<Self> {
        sample_scaling_function(kind, DEFAULT_GRID_STEP, kind.support(shannon_extent))
    }

    /// Analytic value at `x`, zero outside the sampled support.
    pub fn value_at(&self, x: f64) -> f64 {
        let (lo, hi) = self.support;
        if x < lo || x > hi {
            0.0
        } else {
            self.kind.eval(x)
        }
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |i| self.support.0 + i as f64 * self.grid_step)
    }
}

/// Normalized autocorrelation `R(tau)` of a scaling function, `R(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationTable {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
}

/// Discrete autocorrelation on every grid lag, linearly interpolated to the
/// requested lags. Lags beyond the support give zero.
pub fn autocorrelation(sf: &ScalingFunction, lags: &[f64]) -> Result<AutocorrelationTable> {
    if lags.is_empty() {
        return Err(Error::EmptyLags);
    }
    let dense = AutocorrelationTable::dense(sf)?;
    Ok(AutocorrelationTable {
        lags: lags.to_vec(),
        values: lags.iter().map(|&tau| dense.at(tau)).collect(),
    })
}

impl AutocorrelationTable {
    /// Table on the full grid `k * grid_step`, `|k| < samples`.
    pub fn dense(sf: &ScalingFunction) -> Result<Self> {
        if sf.grid_step > MAX_AUTOCORRELATION_STEP {
            return Err(Error::InvalidGrid(format!(
                "grid step {} too coarse for autocorrelation (need <= 1/8)",
                sf.grid_step
            )));
        }
        let x = &sf.samples;
        let n = x.len();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        if energy <= 0.0 {
            return Err(Error::InvalidGrid("scaling function has zero energy".into()));
        }
        let positive: Vec<f64> = (0..n)
            .map(|k| x[k..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / energy)
            .collect();
        let lags = (-(n as isize - 1)..n as isize)
            .map(|k| k as f64 * sf.grid_step)
            .collect();
        let values = (-(n as isize - 1)..n as isize)
            .map(|k| positive[k.unsigned_abs()])
            .collect();
        Ok(Self { lags, values })
    }

    /// Linear interpolation at `tau`; assumes ascending, uniformly spaced lags.
    pub fn at(&self, tau: f64) -> f64 {
        let n = self.lags.len();
        if n == 0 {
            return 0.0;
        }
        if n == 1 {
            return if tau == self.lags[0] { self.values[0] } else { 0.0 };
        }
        let first = self.lags[0];
        let step = self.lags[1] - first;
        let pos = (tau - first) / step;
        if pos < 0.0 || pos > (n - 1) as f64 {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
