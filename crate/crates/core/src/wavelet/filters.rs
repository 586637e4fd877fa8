use serde::{Deserialize, Serialize};

use crate::{sinc, Error, Result};

/// Bound on the even-shift self-correlation of `h` and on the cross-correlation
/// of distinct leaves at multiples of the leaf shift.
pub const ORTHONORMALITY_TOLERANCE: f64 = 0.05;

const REFINE_MAX_ITERATIONS: usize = 200;
const REFINE_TOLERANCE: f64 = 1e-13;

/// Two-channel prototype FIR pair: low-pass `h` and its alternating-flip
/// high-pass mirror `g[q] = (-1)^q h[Q-1-q]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeFilterPair {
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    /// Number of zeros at `zeta = -1` requested for `h`.
    pub zeros: usize,
    pub bandwidth: f64,
    /// Group delay `(Q - 1) / (4B)` of the sinc seed, in samples.
    pub delay: f64,
    /// Orthonormality residual of the unit-energy truncated sinc before refinement.
    pub seed_residual: f64,
}

/// `K0 = 2K - 1 - ceil(2 log2 B)`, the number of continuous derivatives of the
/// scaling autocorrelation.
pub fn regularity_order(zeros: usize, bandwidth: f64) -> i64 {
    2 * zeros as i64 - 1 - (2.0 * bandwidth.log2() - 1e-9).ceil() as i64
}

fn validate(taps: usize, zeros: usize, bandwidth: f64) -> Result<()> {
    if taps == 0 || !taps.is_multiple_of(2) {
        return Err(Error::OddFilterLength(taps));
    }
    if zeros < 1 || zeros > taps / 2 {
        return Err(Error::ZeroCountOutOfRange {
            k: zeros,
            half: taps / 2,
        });
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidBandwidth(bandwidth));
    }
    let k0 = regularity_order(zeros, bandwidth);
    if k0 < 1 {
        return Err(Error::Regularity { k0 });
    }
    Ok(())
}

fn sinc_seed(taps: usize, bandwidth: f64) -> (Vec<f64>, f64) {
    let delay = (taps as f64 - 1.0) / (4.0 * bandwidth);
    let mut h: Vec<f64> = (0..taps).map(|q| sinc(q as f64 - delay)).collect();
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    h.iter_mut().for_each(|v| *v /= norm);
    (h, delay)
}

fn mirror(h: &[f64]) -> Vec<f64> {
    let q = h.len();
    (0..q)
        .map(|i| if i % 2 == 0 { h[q - 1 - i] } else { -h[q - 1 - i] })
        .collect()
}

/// Largest `|sum_q h[q] h[q - 2m]|` over `m != 0`.
pub(crate) fn even_shift_residual(h: &[f64]) -> f64 {
    (1..=h.len() / 2)
        .map(|m| {
            let lag = 2 * m;
            if lag >= h.len() {
                return 0.0;
            }
            h[lag..].iter().zip(h).map(|(a, b)| a * b).sum::<f64>().abs()
        })
        .fold(0.0, f64::max)
}

/// The unit-energy truncated sinc pair `h[q] = sinc(q - D)` without refinement.
///
/// Truncation leaves a measurable orthonormality residual (about 0.06 for
/// `Q = 14, B = sqrt 2`); see [`PrototypeFilterPair::orthonormality_residual`].
pub fn design_truncated_sinc_filters(
    taps: usize,
    zeros: usize,
    bandwidth: f64,
) -> Result<PrototypeFilterPair> {
    validate(taps, zeros, bandwidth)?;
    let (h, delay) = sinc_seed(taps, bandwidth);
    let seed_residual = even_shift_residual(&h);
    Ok(PrototypeFilterPair {
        g: mirror(&h),
        h,
        zeros,
        bandwidth,
        delay,
        seed_residual,
    })
}

/// Designs the prototype pair used by the simulator.
///
/// The truncated sinc `h[q] = sinc(q - D)`, `D = (Q-1)/(4B)`, is the seed. It
/// is then projected (minimum-norm Gauss-Newton) onto the nearest length-`Q`
/// filter that is exactly orthonormal to its even shifts and has `K` zeros at
/// `zeta = -1`. The high-pass branch is the alternating flip of the result.
pub fn design_prototype_filters(
    taps: usize,
    zeros: usize,
    bandwidth: f64,
) -> Result<PrototypeFilterPair> {
    validate(taps, zeros, bandwidth)?;
    let (seed, delay) = sinc_seed(taps, bandwidth);
    let seed_residual = even_shift_residual(&seed);
    let h = refine_orthonormal(&seed, zeros)?;
    Ok(PrototypeFilterPair {
        g: mirror(&h),
        h,
        zeros,
        bandwidth,
        delay,
        seed_residual,
    })
}

/// Constraint vector and Jacobian rows for orthonormality plus `zeros`
/// vanishing alternating moments.
fn constraints(h: &[f64], zeros: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let q = h.len();
    let half = q / 2;
    let mut values = Vec::with_capacity(half + zeros);
    let mut rows = Vec::with_capacity(half + zeros);

    values.push(h.iter().map(|v| v * v).sum::<f64>() - 1.0);
    rows.push(h.iter().map(|v| 2.0 * v).collect());
    for m in 1..half {
        let lag = 2 * m;
        values.push(h[lag..].iter().zip(h).map(|(a, b)| a * b).sum());
        rows.push(
            (0..q)
                .map(|i| {
                    let up = if i + lag < q { h[i + lag] } else { 0.0 };
                    let down = if i >= lag { h[i - lag] } else { 0.0 };
                    up + down
                })
                .collect(),
        );
    }
    // moments about the centre keep the system well conditioned
    let centre = (q as f64 - 1.0) / 2.0;
    let scale = centre.max(1.0);
    for j in 0..zeros {
        let row: Vec<f64> = (0..q)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((i as f64 - centre) / scale).powi(j as i32)
            })
            .collect();
        values.push(row.iter().zip(h).map(|(a, b)| a * b).sum());
        rows.push(row);
    }
    (values, rows)
}

fn refine_orthonormal(seed: &[f64], zeros: usize) -> Result<Vec<f64>> {
    let mut h = seed.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..REFINE_MAX_ITERATIONS {
        let (c, rows) = constraints(&h, zeros);
        residual = c.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if residual < REFINE_TOLERANCE {
            return Ok(h);
        }
        let n = rows.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            }
        }
        let Some(lambda) = solve_dense(gram, c, n) else {
            break;
        };
        for (i, row) in rows.iter().enumerate() {
            for (hq, r) in h.iter_mut().zip(row) {
                *hq -= lambda[i] * r;
            }
        }
    }
    if residual < 1e-10 {
        Ok(h)
    } else {
        Err(Error::RefinementDiverged { residual })
    }
}

/// Gaussian elimination with partial pivoting on a row-major `n x n` system.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Some(x)
}

impl PrototypeFilterPair {
    pub fn taps(&self) -> usize {
        self.h.len()
    }

    pub fn regularity_order(&self) -> i64 {
        regularity_order(self.zeros, self.bandwidth)
    }

    /// Largest even-shift self-correlation of `h`, `max_{m != 0} |sum h[q] h[q-2m]|`.
    pub fn orthonormality_residual(&self) -> f64 {
        even_shift_residual(&self.h)
    }

    pub fn energy(&self) -> f64 {
        self.h.iter().map(|v| v * v).sum()
    }

    /// Largest `|sum_q h[q] g[q - 2m]|` over all integer `m`.
    pub fn cross_residual(&self) -> f64 {
        let q = self.h.len() as isize;
        (-(q / 2)..=q / 2)
            .map(|m| {
                (0..q)
                    .filter_map(|i| {
                        let j = i - 2 * m;
                        (0..q)
                            .contains(&j)
                            .then(|| self.h[i as usize] * self.g[j as usize])
                    })
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn delay_matches_closed_form() {
        let pair = design_prototype_filters(14, 2, SQRT2).unwrap();
        assert!((pair.delay - 13.0 / (4.0 * SQRT2)).abs() < 1e-15);
        assert!((pair.delay - 2.29810).abs() < 1e-5);
        assert_eq!(pair.regularity_order(), 2);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            design_prototype_filters(13, 2, SQRT2),
            Err(Error::OddFilterLength(13))
        ));
        assert!(matches!(
            design_prototype_filters(14, 8, SQRT2),
            Err(Error::ZeroCountOutOfRange { .. })
        ));
        assert!(matches!(
            design_prototype_filters(14, 0, SQRT2),
            Err(Error::ZeroCountOutOfRange { .. })
        ));
        assert!(matches!(
            design_prototype_filters(14, 1, 4.0),
            Err(Error::Regularity { k0: -3 })
        ));
        assert!(matches!(
            design_prototype_filters(14, 2, -1.0),
            Err(Error::InvalidBandwidth(_))
        ));
    }

    #[test]
    fn truncated_seed_matches_sinc_and_reports_residual() {
        let pair = design_truncated_sinc_filters(14, 2, SQRT2).unwrap();
        let norm = (0..14)
            .map(|q| sinc(q as f64 - pair.delay).powi(2))
            .sum::<f64>()
            .sqrt();
        for (q, v) in pair.h.iter().enumerate() {
            assert!((v - sinc(q as f64 - pair.delay) / norm).abs() < 1e-15);
        }
        assert!((pair.energy() - 1.0).abs() < 1e-12);
        // truncation leaves a visible residual
        assert!(pair.orthonormality_residual() > ORTHONORMALITY_TOLERANCE);
        assert_eq!(pair.seed_residual, pair.orthonormality_residual());
    }

    #[test]
    fn refined_pair_is_orthonormal_with_requested_zeros() {
        let pair = design_prototype_filters(14, 2, SQRT2).unwrap();
        assert!(pair.orthonormality_residual() < 1e-12);
        assert!((pair.energy() - 1.0).abs() < 1e-12);
        assert!(pair.cross_residual() < 1e-12);
        // H(-1) = 0 and H'(-1) = 0
        let alt: f64 = pair.h.iter().enumerate().map(|(q, v)| if q % 2 == 0 { *v } else { -v }).sum();
        let alt1: f64 = pair
            .h
            .iter()
            .enumerate()
            .map(|(q, v)| if q % 2 == 0 { q as f64 * v } else { -(q as f64) * v })
            .sum();
        assert!(alt.abs() < 1e-12 && alt1.abs() < 1e-10);
        // low-pass DC gain of an orthonormal pair is sqrt 2
        assert!((pair.h.iter().sum::<f64>() - SQRT2).abs() < 1e-12);
    }

    #[test]
    fn high_pass_is_alternating_flip() {
        let pair = design_prototype_filters(14, 2, SQRT2).unwrap();
        for q in 0..14 {
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(pair.g[q], sign * pair.h[13 - q]);
        }
    }

    #[test]
    fn smallest_instance_is_haar() {
        let pair = design_prototype_filters(2, 1, 1.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pair.h[0] - r).abs() < 1e-12 && (pair.h[1] - r).abs() < 1e-12);
        assert_eq!(pair.orthonormality_residual(), 0.0);
    }

    #[test]
    fn dense_solver_matches_known_system() {
        let x = solve_dense(vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }
}
