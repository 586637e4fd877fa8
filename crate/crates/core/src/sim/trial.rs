use std::borrow::Cow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::rng::{stage_rng, Stage};
use crate::channel::{apply_mac, deploy, draw_channel, ChannelRealization, DeploymentParams};
use crate::coding::{multiplex_groups, Codebook, SensorDecisionFrame};
use crate::fusion::{detect, global_decision, llr_fusion, Detector, Hypothesis, LocalPerformance, StatisticModel};
use crate::metrics::{analytic_pf0, AnalyticInputs, CurveLabel};
use crate::noise::{combined_variance, sample_noise, NoiseModelSpec, NoiseRealization};
use crate::wavelet::{
    build_packet_tree, design_prototype_filters, PrototypeFilterPair, ScalingFunction, ScalingKind,
    WaveletPacketTree,
};
use crate::{Error, Result};

/// Local sensor decisions: `+1` with probability `P_D` under `H1` and `P_F`
/// under `H0`, independently per sensor.
pub fn generate_local_decisions<R: Rng + ?Sized>(
    hypothesis: Hypothesis,
    locals: &LocalPerformance,
    sensors: usize,
    rng: &mut R,
) -> Vec<i8> {
    let p = match hypothesis {
        Hypothesis::H1 => locals.detection,
        Hypothesis::H0 => locals.false_alarm,
    };
    (0..sensors)
        .map(|_| if rng.random::<f64>() < p { 1 } else { -1 })
        .collect()
}

/// Fused output of one curve in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOutcome {
    pub label: CurveLabel,
    pub llr: f64,
    /// Global decision at threshold 0.
    pub decision: Hypothesis,
    /// Closed-form false-detection expression evaluated on this trial.
    pub analytic_pf0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub snr_index: usize,
    pub snr_db: f64,
    pub group: usize,
    pub hypothesis: Hypothesis,
    pub decisions: Vec<i8>,
    pub outcomes: Vec<CurveOutcome>,
}

/// Position of a trial inside a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialIndex {
    pub snr_index: usize,
    pub hypothesis: Hypothesis,
    pub repetition: usize,
}

struct CodedScheme {
    scaling: ScalingKind,
    codebook: Codebook,
}

/// Everything derived from a [`ScenarioConfig`] once per campaign.
pub struct Scenario {
    config: ScenarioConfig,
    pair: Option<PrototypeFilterPair>,
    tree: Option<WaveletPacketTree>,
    schemes: Vec<CodedScheme>,
    benchmark: Option<Codebook>,
    locals: LocalPerformance,
    deployment: DeploymentParams,
    labels: Vec<CurveLabel>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let (pair, tree) = if config.scalings.is_empty() {
            (None, None)
        } else {
            let pair = design_prototype_filters(config.filter_length, config.vanishing_moments, config.bandwidth)?;
            let tree = build_packet_tree(&pair, config.groups)?;
            (Some(pair), Some(tree))
        };
        let schemes = match &tree {
            Some(tree) => config
                .scalings
                .iter()
                .map(|&scaling| {
                    let sf = ScalingFunction::standard(scaling, config.shannon_extent)?;
                    Ok(CodedScheme {
                        scaling,
                        codebook: Codebook::wavelet_packets(tree, &sf, config.oversampling, config.timing_offset)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let benchmark = if config.benchmark {
            Some(Codebook::bare_bpsk(config.oversampling, config.timing_offset)?)
        } else {
            None
        };
        let mut labels = Vec::new();
        for &noise_kind in &config.noise_kinds {
            for scheme in &schemes {
                for &detector in &config.detectors {
                    labels.push(CurveLabel {
                        scaling: Some(scheme.scaling),
                        detector,
                        noise_kind,
                        impulse_probability: config.impulse_probability,
                    });
                }
            }
            if benchmark.is_some() {
                labels.push(CurveLabel {
                    scaling: None,
                    detector: Detector::Mrc,
                    noise_kind,
                    impulse_probability: config.impulse_probability,
                });
            }
        }
        Ok(Self {
            locals: config.locals()?,
            deployment: config.deployment(),
            config,
            pair,
            tree,
            schemes,
            benchmark,
            labels,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn prototype(&self) -> Option<&PrototypeFilterPair> {
        self.pair.as_ref()
    }

    pub fn tree(&self) -> Option<&WaveletPacketTree> {
        self.tree.as_ref()
    }

    /// Curve labels in the order every [`TrialRecord`] lists its outcomes.
    pub fn labels(&self) -> &[CurveLabel] {
        &self.labels
    }

    pub fn trials(&self) -> u64 {
        (self.config.snr_grid_db.len() * 2 * self.config.trials_per_point) as u64
    }

    /// Trial ids are laid out as `(snr_index, hypothesis, repetition)`, with
    /// `H0` first; the scaling kind plays no part so every curve sees the same
    /// random draws.
    pub fn trial_index(&self, trial: u64) -> Result<TrialIndex> {
        if trial >= self.trials() {
            return Err(Error::Config(format!("trial {trial} outside campaign of {} trials", self.trials())));
        }
        let per = self.config.trials_per_point as u64;
        let block = trial / per;
        Ok(TrialIndex {
            snr_index: (block / 2) as usize,
            hypothesis: if block.is_multiple_of(2) { Hypothesis::H0 } else { Hypothesis::H1 },
            repetition: (trial % per) as usize,
        })
    }

    /// Runs the full pipeline for one trial: decisions, coding, multiplexing,
    /// channel, noise, reconstruction, detection and fusion.
    pub fn run_trial(&self, trial: u64) -> Result<TrialRecord> {
        self.run_trial_inner(trial).map_err(|e| Error::Trial {
            trial,
            source: Box::new(e),
        })
    }

    fn run_trial_inner(&self, trial: u64) -> Result<TrialRecord> {
        let cfg = &self.config;
        let index = self.trial_index(trial)?;
        let snr_db = cfg.snr_grid_db[index.snr_index];
        let seed = cfg.master_seed;
        let (z_count, m, n) = (cfg.groups, cfg.sensors, cfg.antennas);
        let group = (trial % z_count as u64) as usize;
        let active: Vec<usize> = if cfg.full_groups { (0..z_count).collect() } else { vec![group] };
        let rho = cfg.rho();

        let mut decision_rng = stage_rng(seed, trial, Stage::Decisions);
        let decisions: Vec<Vec<i8>> = active
            .iter()
            .map(|_| generate_local_decisions(index.hypothesis, &self.locals, m, &mut decision_rng))
            .collect();
        let channels: Vec<ChannelRealization> = if cfg.identity_channel {
            active.iter().map(|&z| ChannelRealization::identity(z, n, m, rho)).collect()
        } else {
            let geometry = deploy(&self.deployment, z_count, m, &mut stage_rng(seed, trial, Stage::Geometry))?;
            let mut channel_rng = stage_rng(seed, trial, Stage::Channel);
            active
                .iter()
                .map(|&z| draw_channel(&geometry, z, &self.deployment, n, rho, &mut channel_rng))
                .collect::<Result<_>>()?
        };
        let focus = active.iter().position(|&z| z == group).expect("focus group is active");
        let x = &decisions[focus];
        let lambda_mean = channels[focus].gains.mean();
        let sigma_e2 = rho * lambda_mean * 10f64.powf(-snr_db / 10.0);

        let mut frames_len = Vec::new();
        for scheme in &self.schemes {
            frames_len.push(scheme.codebook.frame_len(0, m)?);
        }
        if let Some(book) = &self.benchmark {
            frames_len.push(book.frame_len(0, m)?);
        }
        let max_len = frames_len.iter().copied().max().unwrap_or(0);

        let mut outcomes = Vec::with_capacity(self.labels.len());
        for (k, &noise_kind) in cfg.noise_kinds.iter().enumerate() {
            let unit = cfg.noise_spec(noise_kind, 1.0);
            let spec = unit.with_gaussian_variance(sigma_e2 / combined_variance(&unit));
            let model = StatisticModel {
                antennas: n,
                power_scale: rho,
                noise_variance: combined_variance(&spec),
            };
            let noise = if cfg.noise_enabled {
                let sample_spec: NoiseModelSpec = spec.scaled(self.oversampling_factor());
                let mut rng = stage_rng(seed, trial, Stage::Noise(k as u8));
                Some(sample_noise(&sample_spec, n, max_len, &mut rng)?)
            } else {
                None
            };
            for scheme in &self.schemes {
                let (r, d) = self.coded_statistics(&scheme.codebook, &active, &decisions, &channels, focus, noise.as_ref())?;
                for &detector in &cfg.detectors {
                    let (r, d) = detector_view(detector, &r, &d);
                    outcomes.push(self.outcome(
                        CurveLabel {
                            scaling: Some(scheme.scaling),
                            detector,
                            noise_kind,
                            impulse_probability: cfg.impulse_probability,
                        },
                        &r,
                        &d,
                        x,
                        &model,
                    )?);
                }
            }
            if let Some(book) = &self.benchmark {
                let mut chan = channels[focus].clone();
                chan.group = 0;
                let frame = book.encode(&SensorDecisionFrame::new(0, 0, x.clone())?)?;
                let signal = multiplex_groups(vec![frame])?;
                let noise = fit_noise(noise.as_ref(), signal.len())?;
                let received = apply_mac(&signal, &[&chan], noise.as_deref())?;
                let recovered = book.reconstruct(&received, 0, m)?;
                let (r, d) = detect(&recovered, &chan, book.measured_gain(0)?, Detector::Mrc)?;
                outcomes.push(self.outcome(
                    CurveLabel {
                        scaling: None,
                        detector: Detector::Mrc,
                        noise_kind,
                        impulse_probability: cfg.impulse_probability,
                    },
                    &r,
                    &d,
                    x,
                    &model,
                )?);
            }
        }
        Ok(TrialRecord {
            trial,
            snr_index: index.snr_index,
            snr_db,
            group,
            hypothesis: index.hypothesis,
            decisions: x.clone(),
            outcomes,
        })
    }

    fn oversampling_factor(&self) -> f64 {
        self.config.oversampling as f64
    }

    /// Matched-filter statistics and diagonal gains of the focus group.
    fn coded_statistics(
        &self,
        book: &Codebook,
        active: &[usize],
        decisions: &[Vec<i8>],
        channels: &[ChannelRealization],
        focus: usize,
        noise: Option<&NoiseRealization>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let frames = active
            .iter()
            .zip(decisions)
            .map(|(&z, x)| book.encode(&SensorDecisionFrame::new(z, self.tree_levels(), x.clone())?))
            .collect::<Result<Vec<_>>>()?;
        let signal = multiplex_groups(frames)?;
        let noise = fit_noise(noise, signal.len())?;
        let refs: Vec<&ChannelRealization> = channels.iter().collect();
        let received = apply_mac(&signal, &refs, noise.as_deref())?;
        let group = active[focus];
        let recovered = book.reconstruct(&received, group, self.config.sensors)?;
        detect(&recovered, &channels[focus], book.measured_gain(group)?, Detector::Mf)
    }

    fn tree_levels(&self) -> usize {
        self.tree.as_ref().map_or(0, WaveletPacketTree::levels)
    }

    fn outcome(
        &self,
        label: CurveLabel,
        r: &[f64],
        d: &[f64],
        x: &[i8],
        model: &StatisticModel,
    ) -> Result<CurveOutcome> {
        let llr = llr_fusion(r, d, &self.locals, label.detector, model)?;
        let analytic = analytic_pf0(&AnalyticInputs {
            statistics: r,
            diagonal: d,
            decisions: x,
            antennas: model.antennas,
            power_scale: model.power_scale,
            noise_variance: model.noise_variance,
            sensors: self.config.sensors,
            false_alarm: self.locals.false_alarm,
        })?;
        Ok(CurveOutcome {
            label,
            llr,
            decision: global_decision(llr, 0.0),
            analytic_pf0: analytic,
        })
    }
}

/// Noise trimmed to a frame of `len` samples, borrowed when it already fits.
fn fit_noise(noise: Option<&NoiseRealization>, len: usize) -> Result<Option<Cow<'_, NoiseRealization>>> {
    noise
        .map(|e| if e.len == len { Ok(Cow::Borrowed(e)) } else { e.prefix(len).map(Cow::Owned) })
        .transpose()
}

/// ZF divides the matched-filter statistic by the diagonal gain.
fn detector_view(detector: Detector, r: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match detector {
        Detector::Zf => (r.iter().zip(d).map(|(r, d)| r / d).collect(), d.to_vec()),
        Detector::Mf | Detector::Mrc => (r.to_vec(), d.to_vec()),
    }
}

/// Builds the scenario and runs a single trial.
pub fn run_trial(config: &ScenarioConfig, trial: u64) -> Result<TrialRecord> {
    Scenario::new(config.clone())?.run_trial(trial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::stage_rng;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            trials_per_point: 8,
            snr_grid_db: vec![0.0, 10.0],
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn certain_local_decisions() {
        let mut rng = stage_rng(1, 0, Stage::Decisions);
        let locals = LocalPerformance { detection: 1.0, false_alarm: 0.0 };
        assert!(generate_local_decisions(Hypothesis::H1, &locals, 8, &mut rng).iter().all(|&x| x == 1));
        assert!(generate_local_decisions(Hypothesis::H0, &locals, 8, &mut rng).iter().all(|&x| x == -1));
    }

    #[test]
    fn trial_layout() {
        let s = Scenario::new(small()).unwrap();
        assert_eq!(s.trials(), 32);
        assert_eq!(s.trial_index(0).unwrap().hypothesis, Hypothesis::H0);
        let i = s.trial_index(13).unwrap();
        assert_eq!((i.snr_index, i.hypothesis, i.repetition), (0, Hypothesis::H1, 5));
        assert_eq!(s.trial_index(16).unwrap().snr_index, 1);
        assert!(s.trial_index(32).is_err());
        assert_eq!(s.labels().len(), 7);
    }

    #[test]
    fn trial_is_reproducible() {
        let s = Scenario::new(small()).unwrap();
        let a = s.run_trial(21).unwrap();
        let b = s.run_trial(21).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes.len(), 7);
        assert!(a.outcomes.iter().all(|o| o.llr.is_finite()));
    }

    #[test]
    fn full_groups_runs() {
        let s = Scenario::new(ScenarioConfig { full_groups: true, ..small() }).unwrap();
        let rec = s.run_trial(3).unwrap();
        assert_eq!(rec.group, 3);
        assert!(rec.outcomes.iter().all(|o| o.llr.is_finite()));
    }
}
