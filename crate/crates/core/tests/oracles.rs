mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wpdm_core::fusion::{Hypothesis, LocalPerformance};
use wpdm_core::metrics::{analytic_pf0, q_function, wilson_half_width, AnalyticInputs};
use wpdm_core::noise::{combined_variance, sample_noise, NoiseModelSpec};
use wpdm_core::sim::generate_local_decisions;

use common::{enumerated_fusion_error, q_oracle};

#[test]
fn q_function_matches_series_oracle() {
    let mut worst = 0.0f64;
    for i in 0..=1600 {
        let x = -8.0 + i as f64 * 0.01;
        worst = worst.max((q_function(x) - q_oracle(x)).abs());
    }
    assert!(worst <= 1e-10, "max abs error {worst:e}");
}

#[test]
fn q_function_inverse_normal_point() {
    assert!((q_function(1.6449) - 0.05).abs() < 1e-4);
}

#[test]
fn fusion_floor_matches_binomial_form() {
    // H1 iff at least two of eight sensors report +1
    let miss = 0.5f64.powi(8) * (1.0 + 8.0);
    let false_alarm = 1.0 - 0.95f64.powi(8) - 8.0 * 0.05 * 0.95f64.powi(7);
    let expected = 0.5 * (miss + false_alarm);
    assert!((enumerated_fusion_error(8, 0.5, 0.05) - expected).abs() < 1e-15);
    assert!((expected - 0.0462).abs() < 1e-3);
}

#[test]
fn local_decisions_follow_detection_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let locals = LocalPerformance::default();
    let trials = 100_000;
    let ones: usize = (0..trials)
        .map(|_| {
            generate_local_decisions(Hypothesis::H1, &locals, 8, &mut rng)
                .iter()
                .filter(|&&x| x == 1)
                .count()
        })
        .sum();
    let fraction = ones as f64 / (8 * trials) as f64;
    assert!((fraction - 0.5).abs() < 0.01, "{fraction}");
}

#[test]
fn closed_form_variances() {
    // sigma_w^2 = 1, Gamma = 0.25, A = 0.1: 1 + 4 * 10 * H_5
    let h5 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25 + 0.2;
    let class_a = NoiseModelSpec::class_a(0.3, 1.0, 8);
    assert!((combined_variance(&class_a) - (1.0 + 40.0 * h5)).abs() < 1e-12);
    // BG: 1 + M * 4 / 0.3
    let bg = NoiseModelSpec::bernoulli_gaussian(0.3, 1.0, 8);
    assert!((combined_variance(&bg) - (1.0 + 8.0 * 4.0 / 0.3)).abs() < 1e-12);
}

#[test]
fn impulsive_fraction_and_symmetry() {
    let spec = NoiseModelSpec::class_a(0.3, 1.0, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 400_000;
    let e = sample_noise(&spec, 1, n, &mut rng).unwrap();
    let p = e.impulsive as f64 / n as f64;
    let bound = 4.0 * (0.3 * 0.7 / n as f64).sqrt();
    assert!((p - 0.3).abs() < bound, "{p}");
    let mean = e.re.iter().sum::<f64>() / n as f64;
    let sd = (spec.mixture_variance() / n as f64).sqrt();
    assert!(mean.abs() < 3.0 * sd, "{mean} vs {sd}");
}

#[test]
fn analytic_value_is_a_probability_for_reference_setup() {
    let sigma_e2 = combined_variance(&NoiseModelSpec::class_a(0.3, 0.1, 8));
    let rho: f64 = 0.125;
    let d = vec![1.3, 0.7, 2.0, 1.1, 0.9, 1.0, 1.5, 0.8];
    let x = vec![1i8, -1, -1, 1, -1, -1, -1, -1];
    let r: Vec<f64> = d.iter().zip(&x).map(|(d, x)| 64.0 * d * rho.sqrt() * f64::from(*x)).collect();
    let v = analytic_pf0(&AnalyticInputs {
        statistics: &r,
        diagonal: &d,
        decisions: &x,
        antennas: 64,
        power_scale: rho,
        noise_variance: sigma_e2,
        sensors: 8,
        false_alarm: 0.05,
    })
    .unwrap();
    assert!(v > 0.0 && v < 1.0, "{v}");
}

#[test]
fn wilson_half_width_halves_with_four_times_trials() {
    let a = wilson_half_width(500, 1000);
    let b = wilson_half_width(2000, 4000);
    assert!((a / b - 2.0).abs() < 0.01);
}
