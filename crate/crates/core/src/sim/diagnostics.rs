use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::CurveLabel;
use crate::noise::{combined_variance, sample_noise, NoiseKind, NoiseModelSpec};
use crate::wavelet::{
    build_packet_tree, design_prototype_filters, design_truncated_sinc_filters, ORTHONORMALITY_TOLERANCE,
};
use crate::Result;

/// Shift multiples of `2^L` checked for leaf cross-correlation.
pub const CROSS_CORRELATION_SHIFTS: isize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDiagnostics {
    pub filter_length: usize,
    pub vanishing_moments: usize,
    pub bandwidth: f64,
    pub groups: usize,
    pub levels: usize,
    pub regularity_order: i64,
    pub delay: f64,
    /// Truncated-sinc seed before the orthonormal projection.
    pub seed_orthonormality_residual: f64,
    pub seed_max_leaf_cross_correlation: f64,
    pub orthonormality_residual: f64,
    pub cross_residual: f64,
    pub max_leaf_cross_correlation: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Residuals of the designed filter pair and its packet tree.
pub fn filter_diagnostics(taps: usize, zeros: usize, bandwidth: f64, groups: usize) -> Result<FilterDiagnostics> {
    let pair = design_prototype_filters(taps, zeros, bandwidth)?;
    let seed = design_truncated_sinc_filters(taps, zeros, bandwidth)?;
    let tree = build_packet_tree(&pair, groups)?;
    let seed_tree = build_packet_tree(&seed, groups)?;
    let orth = pair.orthonormality_residual();
    let cross = tree.max_leaf_cross_correlation(CROSS_CORRELATION_SHIFTS);
    Ok(FilterDiagnostics {
        filter_length: taps,
        vanishing_moments: zeros,
        bandwidth,
        groups,
        levels: tree.levels(),
        regularity_order: pair.regularity_order(),
        delay: pair.delay,
        seed_orthonormality_residual: seed.orthonormality_residual(),
        seed_max_leaf_cross_correlation: seed_tree.max_leaf_cross_correlation(CROSS_CORRELATION_SHIFTS),
        orthonormality_residual: orth,
        cross_residual: pair.cross_residual(),
        max_leaf_cross_correlation: cross,
        tolerance: ORTHONORMALITY_TOLERANCE,
        within_tolerance: orth <= ORTHONORMALITY_TOLERANCE && cross <= ORTHONORMALITY_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub kind: NoiseKind,
    pub impulse_probability: f64,
    pub gaussian_variance: f64,
    pub samples: usize,
    /// Per real dimension.
    pub empirical_variance: f64,
    pub mixture_variance: f64,
    pub relative_error: f64,
    pub excess_kurtosis: f64,
    /// Variance used by the fusion statistic model.
    pub closed_form_variance: f64,
}

/// Empirical variance and excess kurtosis of `samples` complex draws,
/// pooling real and imaginary parts.
pub fn calibrate_noise<R: Rng + ?Sized>(spec: &NoiseModelSpec, samples: usize, rng: &mut R) -> Result<NoiseCalibration> {
    const CHUNK: usize = 1 << 16;
    let (mut s2, mut s4, mut count) = (0.0f64, 0.0f64, 0usize);
    let mut left = samples;
    while left > 0 {
        let len = left.min(CHUNK);
        let e = sample_noise(spec, 1, len, rng)?;
        for v in e.re.iter().chain(&e.im) {
            let v2 = v * v;
            s2 += v2;
            s4 += v2 * v2;
        }
        count += 2 * len;
        left -= len;
    }
    let var = s2 / count as f64;
    let kurt = if var > 0.0 { s4 / count as f64 / (var * var) - 3.0 } else { 0.0 };
    let expected = spec.mixture_variance();
    Ok(NoiseCalibration {
        kind: spec.kind,
        impulse_probability: spec.impulse_probability,
        gaussian_variance: spec.gaussian_variance,
        samples,
        empirical_variance: var,
        mixture_variance: expected,
        relative_error: if expected > 0.0 { (var - expected).abs() / expected } else { var },
        excess_kurtosis: kurt,
        closed_form_variance: combined_variance(spec),
    })
}

/// Closed-form false-detection value averaged over the `H0` trials of one
/// curve, next to the Monte Carlo false-detection rate at threshold 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticComparison {
    pub scaling: String,
    pub detector: String,
    pub noise_kind: NoiseKind,
    pub p_imp: f64,
    pub snr_db: f64,
    pub analytic_closed_form: f64,
    pub monte_carlo_pf0: f64,
}

impl AnalyticComparison {
    pub fn new(label: &CurveLabel, snr_db: f64, analytic: f64, monte_carlo: f64) -> Self {
        Self {
            scaling: label.scaling_name().to_string(),
            detector: label.detector.as_str().to_string(),
            noise_kind: label.noise_kind,
            p_imp: label.impulse_probability,
            snr_db,
            analytic_closed_form: analytic,
            monte_carlo_pf0: monte_carlo,
        }
    }
}
