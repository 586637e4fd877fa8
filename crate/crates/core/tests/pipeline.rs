mod common;

use std::fs;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wpdm_core::channel::{apply_mac, deploy, draw_channel, DeploymentParams};
use wpdm_core::cli;
use wpdm_core::coding::{multiplex_groups, Codebook, SensorDecisionFrame};
use wpdm_core::fusion::{Detector, Hypothesis, LLR_CLAMP};
use wpdm_core::sim::{
    load_config_snapshot, persist_results, run_campaign, RunOptions, Scenario, ScenarioConfig, DIAGNOSTICS_FILE,
    ROC_FILE, SWEEP_FILE,
};
use wpdm_core::wavelet::ScalingKind;

fn quick(trials: usize) -> ScenarioConfig {
    ScenarioConfig {
        scalings: vec![ScalingKind::Haar, ScalingKind::Spline],
        trials_per_point: trials,
        snr_grid_db: vec![0.0, 10.0],
        ..ScenarioConfig::default()
    }
}

fn serial() -> RunOptions {
    RunOptions {
        workers: Some(1),
        progress: false,
    }
}

#[test]
fn noiseless_trial_matches_ideal_fusion_of_local_decisions() {
    let cfg = ScenarioConfig {
        noise_enabled: false,
        trials_per_point: 200,
        ..ScenarioConfig::default()
    };
    let s = Scenario::new(cfg).unwrap();
    for id in 0..s.trials() {
        let rec = s.run_trial(id).unwrap();
        let ones = rec.decisions.iter().filter(|&&x| x == 1).count();
        let ideal = if ones >= 2 { Hypothesis::H1 } else { Hypothesis::H0 };
        for o in &rec.outcomes {
            assert_eq!(o.decision, ideal, "trial {id} curve {:?}", o.label);
        }
    }
}

#[test]
fn fused_llr_is_finite_and_clamped_at_reference_setup() {
    let cfg = ScenarioConfig {
        trials_per_point: 5_000,
        ..ScenarioConfig::default()
    };
    let s = Scenario::new(cfg).unwrap();
    let bound = 8.0 * LLR_CLAMP;
    for id in 0..s.trials() {
        for o in s.run_trial(id).unwrap().outcomes {
            assert!(o.llr.is_finite() && o.llr.abs() <= bound, "trial {id}: {}", o.llr);
        }
    }
}

#[test]
fn tables_conserve_trials() {
    let cfg = quick(25);
    let rs = run_campaign(&cfg, &serial()).unwrap();
    assert_eq!(rs.diagnostics.trials_executed, 100);
    for row in &rs.sweep {
        assert_eq!(row.trials, 50);
    }
    for row in &rs.roc {
        assert_eq!(row.point.trials_h1 + row.point.trials_h0, 50);
    }
    let curves = 2 * cfg.detectors.len() + 1;
    assert_eq!(rs.sweep.len(), curves * 2);
}

#[test]
fn persisted_outputs_are_byte_identical_and_round_trip() {
    let cfg = quick(20);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    persist_results(&run_campaign(&cfg, &serial()).unwrap(), a.path()).unwrap();
    persist_results(&run_campaign(&cfg, &RunOptions { workers: Some(4), progress: false }).unwrap(), b.path()).unwrap();
    for name in [ROC_FILE, SWEEP_FILE, DIAGNOSTICS_FILE] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert_eq!(load_config_snapshot(a.path()).unwrap(), cfg);
    let diag: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join(DIAGNOSTICS_FILE)).unwrap()).unwrap();
    assert_eq!(diag["config_hash"].as_str().unwrap(), cfg.hash());
    assert_eq!(diag["master_seed"].as_u64().unwrap(), cfg.master_seed);
    assert!(diag["analytic"][0]["analytic_closed_form"].is_f64());
}

#[test]
fn pfd_does_not_increase_with_snr() {
    let cfg = ScenarioConfig {
        scalings: vec![ScalingKind::Haar],
        detectors: vec![Detector::Zf],
        snr_grid_db: vec![-30.0, -10.0, 10.0],
        trials_per_point: 400,
        ..ScenarioConfig::default()
    };
    let rs = run_campaign(&cfg, &serial()).unwrap();
    for label in Scenario::new(cfg).unwrap().labels() {
        let rows = rs.sweep_curve(label);
        for w in rows.windows(2) {
            assert!(w[1].pfd <= w[0].pfd + w[0].pfd_ci + w[1].pfd_ci, "{rows:?}");
        }
    }
}

#[test]
fn mac_energy_bookkeeping() {
    let params = DeploymentParams::default();
    let book = Codebook::bare_bpsk(8, 0.0).unwrap();
    let m = 4;
    let x = vec![1i8, -1, 1, 1];
    let frame = book.encode(&SensorDecisionFrame::new(0, 0, x).unwrap()).unwrap();
    let signal = multiplex_groups(vec![frame]).unwrap();
    let slot_energy = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let geometry = deploy(&params, 1, m, &mut rng).unwrap();
    let (mut measured, mut expected) = (0.0, 0.0);
    let rho = 0.5;
    for _ in 0..100_000 {
        let chan = draw_channel(&geometry, 0, &params, 1, rho, &mut rng).unwrap();
        let y = apply_mac(&signal, &[&chan], None).unwrap();
        measured += y.energy() / 8.0;
        expected += rho * chan.gains.lambda.iter().sum::<f64>() * slot_energy;
    }
    assert!((measured / expected - 1.0).abs() < 0.02, "{measured} vs {expected}");
}

#[test]
fn geometry_and_fading_are_seed_deterministic() {
    let params = DeploymentParams::default();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = deploy(&params, 4, 8, &mut rng).unwrap();
        let c = draw_channel(&g, 2, &params, 16, 0.25, &mut rng).unwrap();
        (g, c)
    };
    assert_eq!(draw(3), draw(3));
    assert_ne!(draw(3).1.fading, draw(4).1.fading);
}

#[test]
fn zero_input_reconstructs_to_zero() {
    let book = common::reference_codebook(ScalingKind::Spline, 4);
    let y = wpdm_core::channel::ReceivedSignal::zeros(2, book.frame_len(0, 8).unwrap());
    let rec = book.reconstruct(&y, 0, 8).unwrap();
    assert!(rec.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
}

#[test]
fn haar_gain_drops_with_timing_offset() {
    let pair = wpdm_core::wavelet::design_prototype_filters(14, 2, std::f64::consts::SQRT_2).unwrap();
    let tree = wpdm_core::wavelet::build_packet_tree(&pair, 4).unwrap();
    let sf = wpdm_core::wavelet::ScalingFunction::standard(ScalingKind::Haar, 16.0).unwrap();
    let gain = |delta| {
        let book = Codebook::wavelet_packets(&tree, &sf, 8, delta).unwrap();
        common::noiseless_round_trip(&book, &[vec![1i8], vec![-1i8]], 1)[0][0].re
    };
    let (g0, g1, g2) = (gain(0.0), gain(0.125), gain(0.25));
    assert!((g0 - 1.0).abs() < 1e-9);
    assert!(g0 > g1 && g1 > g2, "{g0} {g1} {g2}");
}

#[test]
fn cli_run_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    fs::write(&config, "scalings = [\"haar\"]\nsnr_grid_db = [5.0]\ntrials_per_point = 3\n").unwrap();
    let out = dir.path().join("nested/out");
    let code = cli::run([
        "wpdm",
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(code, cli::EXIT_OK);
    for name in [ROC_FILE, SWEEP_FILE, DIAGNOSTICS_FILE] {
        assert!(out.join(name).is_file(), "{name}");
    }
}

#[test]
fn cli_rejects_single_group_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "sensors = 8\ngroups = 1\n").unwrap();
    let code = cli::run(["wpdm", "run", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, cli::EXIT_CONFIG);
    assert!(!dir.path().join(ROC_FILE).exists());
}

#[test]
fn cli_preset_with_trial_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2");
    let code = cli::run(["wpdm", "preset", "fig2", "--trials", "2", "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code, cli::EXIT_OK);
    let snapshot = load_config_snapshot(&out).unwrap();
    assert_eq!(snapshot.impulse_probability, 0.3);
    assert_eq!(snapshot.master_seed, 7);
    assert_eq!(snapshot.trials_per_point, 2);
}

#[test]
fn cli_calibrates_gaussian_noise() {
    assert_eq!(
        cli::run(["wpdm", "calibrate-noise", "--kind", "gaussian_only", "--samples", "1000000"]),
        cli::EXIT_OK
    );
}
