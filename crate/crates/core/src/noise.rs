//! Gaussian background plus impulsive noise (Middleton Class A or
//! Bernoulli-Gaussian) and the closed-form variance used by the fusion rule.
//!
//! Variances are per real dimension: a complex sample with variance `v` has
//! independent real and imaginary parts of variance `v` each.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Terms kept from the Class A series in [`combined_variance`].
const CLASS_A_TERMS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    ClassA,
    BernoulliGaussian,
    GaussianOnly,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::ClassA => "class_a",
            NoiseKind::BernoulliGaussian => "bernoulli_gaussian",
            NoiseKind::GaussianOnly => "gaussian_only",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "class_a" | "classa" | "middleton" => Ok(NoiseKind::ClassA),
            "bernoulli_gaussian" | "bg" => Ok(NoiseKind::BernoulliGaussian),
            "gaussian_only" | "gaussian" => Ok(NoiseKind::GaussianOnly),
            other => Err(Error::Config(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Two-component noise mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModelSpec {
    pub kind: NoiseKind,
    /// Probability that a sample comes from the impulsive component.
    pub impulse_probability: f64,
    /// `Gamma = sigma_g^2 / sigma_I^2`.
    pub gamma: f64,
    /// Class A impulse index `A`.
    pub impulse_index: f64,
    /// Bernoulli gate probability.
    pub bernoulli_probability: f64,
    /// Bernoulli-Gaussian occurrence frequency.
    pub occurrence: f64,
    /// Background Gaussian variance `sigma_w^2 = sigma_g^2`.
    pub gaussian_variance: f64,
    /// Sensors per group; enters the Bernoulli-Gaussian closed form.
    pub sensors: usize,
}

impl NoiseModelSpec {
    /// Class A with `Gamma = 0.25`, `A = 0.1`.
    pub fn class_a(impulse_probability: f64, gaussian_variance: f64, sensors: usize) -> Self {
        Self {
            kind: NoiseKind::ClassA,
            impulse_probability,
            gamma: 0.25,
            impulse_index: 0.1,
            bernoulli_probability: 0.3,
            occurrence: 1.0,
            gaussian_variance,
            sensors,
        }
    }

    /// Bernoulli-Gaussian with `Gamma = 0.25`, gate probability 0.3.
    pub fn bernoulli_gaussian(impulse_probability: f64, gaussian_variance: f64, sensors: usize) -> Self {
        Self {
            kind: NoiseKind::BernoulliGaussian,
            ..Self::class_a(impulse_probability, gaussian_variance, sensors)
        }
    }

    pub fn gaussian(gaussian_variance: f64) -> Self {
        Self {
            kind: NoiseKind::GaussianOnly,
            impulse_probability: 0.0,
            ..Self::class_a(0.0, gaussian_variance, 1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.impulse_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability {
                name: "impulse_probability",
                value: p,
            });
        }
        if !(self.gaussian_variance >= 0.0 && self.gaussian_variance.is_finite()) {
            return Err(Error::InvalidNoise(format!(
                "Gaussian variance {} must be finite and nonnegative",
                self.gaussian_variance
            )));
        }
        match self.kind {
            NoiseKind::GaussianOnly => {}
            NoiseKind::ClassA => {
                self.check_gamma()?;
                if !(self.impulse_index > 0.0 && self.impulse_index.is_finite()) {
                    return Err(Error::InvalidNoise(format!(
                        "impulse index A = {} must be positive",
                        self.impulse_index
                    )));
                }
            }
            NoiseKind::BernoulliGaussian => {
                self.check_gamma()?;
                let rho = self.bernoulli_probability;
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(Error::InvalidProbability {
                        name: "bernoulli_probability",
                        value: rho,
                    });
                }
                if !(self.occurrence >= 0.0 && self.occurrence.is_finite()) {
                    return Err(Error::InvalidNoise(format!(
                        "occurrence frequency {} must be nonnegative",
                        self.occurrence
                    )));
                }
                if self.sensors == 0 {
                    return Err(Error::InvalidNoise("sensor count must be positive".into()));
                }
            }
        }
        Ok(())
    }

    fn check_gamma(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidNoise(format!("Gamma = {} must be positive", self.gamma)));
        }
        Ok(())
    }

    /// `sigma_I^2 = sigma_g^2 / Gamma`.
    pub fn impulsive_variance(&self) -> f64 {
        match self.kind {
            NoiseKind::GaussianOnly => 0.0,
            _ => self.gaussian_variance / self.gamma,
        }
    }

    pub fn with_gaussian_variance(&self, gaussian_variance: f64) -> Self {
        Self {
            gaussian_variance,
            ..self.clone()
        }
    }

    /// Every variance multiplied by `factor` (Gamma fixed).
    pub fn scaled(&self, factor: f64) -> Self {
        self.with_gaussian_variance(self.gaussian_variance * factor)
    }

    /// True variance of the generated mixture, per real dimension.
    pub fn mixture_variance(&self) -> f64 {
        let p = self.impulse_probability;
        let g = self.gaussian_variance;
        match self.kind {
            NoiseKind::GaussianOnly => g,
            NoiseKind::ClassA => {
                (1.0 - p) * g
                    + p * expected_sqrt_kappa(self.impulse_index) * self.impulsive_variance()
                        / self.impulse_index
            }
            NoiseKind::BernoulliGaussian => {
                (1.0 - p) * g + p * self.bernoulli_probability * self.occurrence * self.impulsive_variance()
            }
        }
    }
}

/// Closed-form combined variance entering the conditional statistic model:
/// Class A `sigma_w^2 + sum_{g=1..5} sigma_I^2 / (g A)`, Bernoulli-Gaussian
/// `sigma_w^2 + M sigma_I^2 / rho`, Gaussian only `sigma_w^2`.
pub fn combined_variance(spec: &NoiseModelSpec) -> f64 {
    let w = spec.gaussian_variance;
    let i = spec.impulsive_variance();
    match spec.kind {
        NoiseKind::GaussianOnly => w,
        NoiseKind::ClassA => {
            w + (1..=CLASS_A_TERMS)
                .map(|g| i / (g as f64 * spec.impulse_index))
                .sum::<f64>()
        }
        NoiseKind::BernoulliGaussian => w + spec.sensors as f64 * i / spec.bernoulli_probability,
    }
}

/// `E[sqrt(kappa) | kappa >= 1]` for `kappa ~ Poisson(A)`.
pub fn expected_sqrt_kappa(a: f64) -> f64 {
    let mut term = (-a).exp(); // P(kappa = 0)
    let tail = -(-a).exp_m1();
    let mut acc = 0.0;
    for k in 1..200u32 {
        term *= a / k as f64;
        acc += term * (k as f64).sqrt();
        if term < 1e-300 || (k as f64 > a && term * (k as f64).sqrt() < acc * 1e-18) {
            break;
        }
    }
    acc / tail
}

/// Draw from `Poisson(a)` conditioned on `>= 1`, by CDF inversion.
pub fn sample_conditioned_poisson<R: Rng + ?Sized>(a: f64, rng: &mut R) -> u32 {
    ConditionedPoisson::new(a).sample(rng)
}

/// `Poisson(a)` conditioned on `>= 1`, with the normalizers precomputed.
#[derive(Debug, Clone, Copy)]
struct ConditionedPoisson {
    a: f64,
    p0: f64,
    tail: f64,
}

impl ConditionedPoisson {
    fn new(a: f64) -> Self {
        Self {
            a,
            p0: (-a).exp(),
            tail: -(-a).exp_m1(),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random::<f64>() * self.tail;
        let mut term = self.p0;
        let mut cdf = 0.0;
        let mut k = 0u32;
        loop {
            k += 1;
            term *= self.a / k as f64;
            cdf += term;
            if u < cdf || term < 1e-300 {
                return k;
            }
        }
    }
}

/// Noise samples at every antenna, row-major `antennas x len`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub antennas: usize,
    pub len: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// Samples drawn from the impulsive branch.
    pub impulsive: usize,
}

impl NoiseRealization {
    pub fn zeros(antennas: usize, len: usize) -> Self {
        Self {
            antennas,
            len,
            re: vec![0.0; antennas * len],
            im: vec![0.0; antennas * len],
            impulsive: 0,
        }
    }

    /// The first `len` samples of every antenna.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len > self.len {
            return Err(Error::FrameTooShort {
                needed: len,
                available: self.len,
            });
        }
        let take = |v: &[f64]| -> Vec<f64> {
            v.chunks(self.len).flat_map(|row| row[..len].iter().copied()).collect()
        };
        Ok(Self {
            antennas: self.antennas,
            len,
            re: take(&self.re),
            im: take(&self.im),
            impulsive: self.impulsive,
        })
    }
}

/// Draws `antennas x len` complex noise samples from the mixture.
pub fn sample_noise<R: Rng + ?Sized>(
    spec: &NoiseModelSpec,
    antennas: usize,
    len: usize,
    rng: &mut R,
) -> Result<NoiseRealization> {
    spec.validate()?;
    let total = antennas * len;
    let mut re = Vec::with_capacity(total);
    let mut im = Vec::with_capacity(total);
    let mut impulsive = 0usize;
    let sd_g = spec.gaussian_variance.sqrt();
    let p = match spec.kind {
        NoiseKind::GaussianOnly => 0.0,
        _ => spec.impulse_probability,
    };
    let sigma_i2 = spec.impulsive_variance();
    let class_a_scale = sigma_i2 / spec.impulse_index;
    let bg_sd = (spec.occurrence * sigma_i2).sqrt();
    let poisson = ConditionedPoisson::new(spec.impulse_index);
    for _ in 0..total {
        let sd = if p > 0.0 && rng.random::<f64>() < p {
            impulsive += 1;
            match spec.kind {
                NoiseKind::ClassA => {
                    let kappa = poisson.sample(rng);
                    ((kappa as f64).sqrt() * class_a_scale).sqrt()
                }
                NoiseKind::BernoulliGaussian => {
                    if rng.random::<f64>() < spec.bernoulli_probability {
                        bg_sd
                    } else {
                        0.0
                    }
                }
                NoiseKind::GaussianOnly => sd_g,
            }
        } else {
            sd_g
        };
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        re.push(sd * a);
        im.push(sd * b);
    }
    Ok(NoiseRealization {
        antennas,
        len,
        re,
        im,
        impulsive,
    })
}
