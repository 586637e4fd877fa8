//! Q-function, the closed-form false-detection expression, and Monte Carlo
//! ROC / false-detection estimates with Wilson intervals.

use serde::{Deserialize, Serialize};

use crate::fusion::Detector;
use crate::noise::NoiseKind;
use crate::wavelet::ScalingKind;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;
pub const THRESHOLD_POINTS: usize = 201;

/// Standard normal tail probability, `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Half-width of the 95% Wilson score interval for `successes / trials`.
pub fn wilson_half_width(successes: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 0.5;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    WILSON_Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// 201 thresholds uniform over `[-M ln 10 - 1, M ln 10 + 1]`.
pub fn default_threshold_grid(sensors: usize) -> Vec<f64> {
    let span = sensors as f64 * 10f64.ln() + 1.0;
    (0..THRESHOLD_POINTS)
        .map(|i| -span + 2.0 * span * i as f64 / (THRESHOLD_POINTS - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub pd0: f64,
    pub pf0: f64,
    pub pd0_ci: f64,
    pub pf0_ci: f64,
    pub trials_h1: usize,
    pub trials_h0: usize,
}

/// Number of entries of the ascending slice strictly greater than `t`.
fn count_above(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|v| *v <= t)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `Pd0 = #{H1 trials with Lambda > t} / #H1`, `Pf0` likewise under H0.
pub fn estimate_roc(h1: &[f64], h0: &[f64], thresholds: &[f64]) -> Result<Vec<RocPoint>> {
    if h1.is_empty() {
        return Err(Error::EmptyPopulation("H1"));
    }
    if h0.is_empty() {
        return Err(Error::EmptyPopulation("H0"));
    }
    let (s1, s0) = (sorted(h1), sorted(h0));
    Ok(thresholds
        .iter()
        .map(|&t| {
            let d = count_above(&s1, t);
            let f = count_above(&s0, t);
            RocPoint {
                threshold: t,
                pd0: d as f64 / s1.len() as f64,
                pf0: f as f64 / s0.len() as f64,
                pd0_ci: wilson_half_width(d, s1.len()),
                pf0_ci: wilson_half_width(f, s0.len()),
                trials_h1: s1.len(),
                trials_h0: s0.len(),
            }
        })
        .collect())
}

/// Error probability at `threshold` with equal priors: misses under H1 plus
/// false detections under H0, pooled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub errors: usize,
    pub trials: usize,
    pub rate: f64,
    pub ci: f64,
}

pub fn estimate_pfd(h1: &[f64], h0: &[f64], threshold: f64) -> Result<ErrorEstimate> {
    if h1.is_empty() {
        return Err(Error::EmptyPopulation("H1"));
    }
    if h0.is_empty() {
        return Err(Error::EmptyPopulation("H0"));
    }
    let misses = h1.iter().filter(|v| **v <= threshold).count();
    let false_detections = h0.iter().filter(|v| **v > threshold).count();
    let errors = misses + false_detections;
    let trials = h1.len() + h0.len();
    Ok(ErrorEstimate {
        errors,
        trials,
        rate: errors as f64 / trials as f64,
        ci: wilson_half_width(errors, trials),
    })
}

/// Labels shared by every row of one curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveLabel {
    /// `None` for the uncoded benchmark.
    pub scaling: Option<ScalingKind>,
    pub detector: Detector,
    pub noise_kind: NoiseKind,
    pub impulse_probability: f64,
}

impl CurveLabel {
    pub fn scaling_name(&self) -> &'static str {
        self.scaling.map_or("none", ScalingKind::as_str)
    }
}

/// Fused LLRs of one curve at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub h1: Vec<f64>,
    pub h0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrSweepRow {
    pub label: CurveLabel,
    pub snr_db: f64,
    pub pfd: f64,
    pub pfd_ci: f64,
    pub errors: usize,
    pub trials: usize,
}

/// Probability of erroneous detection at threshold 0 for each SNR point.
pub fn estimate_pfd_vs_snr(label: CurveLabel, points: &[SnrPoint]) -> Result<Vec<SnrSweepRow>> {
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    points
        .iter()
        .map(|p| {
            let e = estimate_pfd(&p.h1, &p.h0, 0.0)?;
            Ok(SnrSweepRow {
                label,
                snr_db: p.snr_db,
                pfd: e.rate,
                pfd_ci: e.ci,
                errors: e.errors,
                trials: e.trials,
            })
        })
        .collect()
}

/// Inputs of the closed-form false-detection expression.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticInputs<'a> {
    pub statistics: &'a [f64],
    pub diagonal: &'a [f64],
    pub decisions: &'a [i8],
    pub antennas: usize,
    pub power_scale: f64,
    pub noise_variance: f64,
    pub sensors: usize,
    pub false_alarm: f64,
}

/// Per-sensor `Q((r_m - sqrt(N d_m rho) x_m / sigma_e) / sqrt((M(1 - P_F) + sigma_e^2) / 2))`,
/// averaged over sensors.
///
/// The expression is evaluated as written; Monte Carlo estimates are the
/// primary result.
pub fn analytic_pf0(inputs: &AnalyticInputs<'_>) -> Result<f64> {
    let m = inputs.statistics.len();
    if m == 0 || inputs.diagonal.len() != m || inputs.decisions.len() != m {
        return Err(Error::DimensionMismatch("analytic inputs must share a nonzero length".into()));
    }
    let sigma = inputs.noise_variance.sqrt();
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::NonPositiveVariance(inputs.noise_variance));
    }
    let denom2 = 0.5 * (inputs.sensors as f64 * (1.0 - inputs.false_alarm) + inputs.noise_variance);
    if denom2.is_nan() || denom2 <= 0.0 {
        return Err(Error::NonPositiveVariance(denom2));
    }
    let denom = denom2.sqrt();
    let n = inputs.antennas as f64;
    let total: f64 = (0..m)
        .map(|i| {
            let shift = (n * inputs.diagonal[i] * inputs.power_scale).sqrt() * f64::from(inputs.decisions[i]) / sigma;
            q_function((inputs.statistics[i] - shift) / denom)
        })
        .sum();
    Ok(total / m as f64)
}

/// Best `pd0` (upper bound) of `curve` at false-detection rate at most `pf`
/// (lower bound).
fn best_upper_pd(curve: &[RocPoint], pf: f64) -> Option<f64> {
    curve
        .iter()
        .filter(|q| q.pf0 - q.pf0_ci <= pf)
        .map(|q| q.pd0 + q.pd0_ci)
        .reduce(f64::max)
}

/// `a` weakly dominates `b` within confidence bounds: at every point of `b`
/// some point of `a` reaches at least its detection rate, allowing both
/// intervals.
pub fn weakly_dominates(a: &[RocPoint], b: &[RocPoint]) -> bool {
    b.iter().all(|p| {
        best_upper_pd(a, p.pf0 + p.pf0_ci).is_some_and(|pd| pd >= p.pd0 - p.pd0_ci)
    })
}

/// Some point of `a` beats a point of `b` by more than both intervals, at no
/// larger false-detection rate.
pub fn significantly_better_somewhere(a: &[RocPoint], b: &[RocPoint]) -> bool {
    b.iter().any(|p| {
        a.iter()
            .any(|q| q.pf0 <= p.pf0 && q.pd0 - q.pd0_ci > p.pd0 + p.pd0_ci)
    })
}

/// `b` is dominated by `a`: `a` is significantly better somewhere and never
/// significantly worse.
pub fn is_dominated(b: &[RocPoint], a: &[RocPoint]) -> bool {
    significantly_better_somewhere(a, b) && !significantly_better_somewhere(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(1.6449) - 0.05).abs() < 1e-4);
        for x in [0.5, 1.0, 2.0] {
            assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn roc_edges() {
        let h1 = [1.0, 2.0, -0.5];
        let h0 = [-1.0, 0.5];
        let roc = estimate_roc(&h1, &h0, &[f64::NEG_INFINITY, f64::INFINITY]).unwrap();
        assert_eq!((roc[0].pd0, roc[0].pf0), (1.0, 1.0));
        assert_eq!((roc[1].pd0, roc[1].pf0), (0.0, 0.0));
        assert!(matches!(estimate_roc(&[], &h0, &[0.0]), Err(Error::EmptyPopulation("H1"))));
    }

    #[test]
    fn threshold_grid_spans_llr_range() {
        let g = default_threshold_grid(8);
        assert_eq!(g.len(), 201);
        assert!((g[0] + 8.0 * 10f64.ln() + 1.0).abs() < 1e-12);
        assert!((g[200] - 8.0 * 10f64.ln() - 1.0).abs() < 1e-12);
        assert!((g[100]).abs() < 1e-12);
    }

    #[test]
    fn roc_is_monotone_in_threshold() {
        let h1: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin() * 5.0 + 1.0).collect();
        let h0: Vec<f64> = (0..200).map(|i| (i as f64 * 0.91).cos() * 5.0 - 1.0).collect();
        let roc = estimate_roc(&h1, &h0, &default_threshold_grid(4)).unwrap();
        for w in roc.windows(2) {
            assert!(w[1].pd0 <= w[0].pd0 && w[1].pf0 <= w[0].pf0);
        }
    }

    #[test]
    fn wilson_shrinks_with_trials() {
        let a = wilson_half_width(100, 1000);
        let b = wilson_half_width(200, 2000);
        assert!((a / b - 2f64.sqrt()).abs() < 0.01);
        assert!(wilson_half_width(0, 10) > 0.0);
    }

    #[test]
    fn pfd_pools_both_hypotheses() {
        let e = estimate_pfd(&[1.0, -1.0, 0.0, 3.0], &[0.5, -2.0], 0.0).unwrap();
        assert_eq!((e.errors, e.trials), (3, 6));
        assert!(matches!(estimate_pfd_vs_snr(
            CurveLabel { scaling: None, detector: Detector::Mrc, noise_kind: NoiseKind::ClassA, impulse_probability: 0.3 },
            &[]
        ), Err(Error::EmptyGrid)));
    }

    #[test]
    fn analytic_boundaries() {
        let r = [0.0];
        let d = [1.0];
        let x = [1];
        let base = AnalyticInputs {
            statistics: &r,
            diagonal: &d,
            decisions: &x,
            antennas: 64,
            power_scale: 0.125,
            noise_variance: 1e8,
            sensors: 8,
            false_alarm: 0.05,
        };
        // huge denominator: Q(small) -> 1/2
        assert!((analytic_pf0(&base).unwrap() - 0.5).abs() < 1e-3);
        // P_F = 1 leaves only the noise term in the denominator
        let pf1 = AnalyticInputs { false_alarm: 1.0, noise_variance: 4.0, ..base.clone() };
        let shift = (64.0f64 * 0.125).sqrt() / 2.0;
        assert!((analytic_pf0(&pf1).unwrap() - q_function(-shift / 2f64.sqrt())).abs() < 1e-15);
        let bad = AnalyticInputs { noise_variance: 0.0, ..base };
        assert!(analytic_pf0(&bad).is_err());
    }

    #[test]
    fn dominance_helpers() {
        let pt = |pf: f64, pd: f64| RocPoint {
            threshold: 0.0,
            pd0: pd,
            pf0: pf,
            pd0_ci: 0.01,
            pf0_ci: 0.01,
            trials_h1: 1000,
            trials_h0: 1000,
        };
        let good = vec![pt(1.0, 1.0), pt(0.1, 0.9), pt(0.0, 0.0)];
        let bad = vec![pt(1.0, 1.0), pt(0.1, 0.5), pt(0.0, 0.0)];
        assert!(weakly_dominates(&good, &bad));
        assert!(!weakly_dominates(&bad, &good));
        assert!(weakly_dominates(&good, &good));
        assert!(is_dominated(&bad, &good));
        assert!(!is_dominated(&good, &good));
    }
}
