//! Waveform coding of BPSK decisions onto wavelet packets, group multiplexing
//! and the correlator-bank reconstruction at the fusion center.
//!
//! Sensor `m` of a group transmits `x_m w(t - m S)`, where `w` is the group's
//! unit-energy leaf waveform `w(t) = sum_k f[k] phi(t - k)` and `S = 2^L T0`
//! is the leaf shift. The receiver correlates against `phi` at integer lags,
//! undoes the pulse autocorrelation at those lags and applies the leaf
//! filter, which collapses into a single dual template per group. Slots then
//! overlap in time without interfering even when `phi` is not orthogonal to
//! its own integer shifts.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ReceivedSignal;
use crate::wavelet::{AutocorrelationTable, ScalingFunction, WaveletPacketTree};
use crate::{Error, Result};

pub const DEFAULT_OVERSAMPLING: usize = 8;

/// Largest supported constant timing error, in `T0`.
pub const MAX_TIMING_OFFSET: f64 = 1.0;

/// Local BPSK decisions of one sensor group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorDecisionFrame {
    pub group: usize,
    pub level: usize,
    pub decisions: Vec<i8>,
}

impl SensorDecisionFrame {
    pub fn new(group: usize, level: usize, decisions: Vec<i8>) -> Result<Self> {
        if decisions.is_empty() {
            return Err(Error::DimensionMismatch("a group needs at least one sensor".into()));
        }
        if let Some(bad) = decisions.iter().find(|d| **d != 1 && **d != -1) {
            return Err(Error::InvalidDecision(*bad));
        }
        Ok(Self {
            group,
            level,
            decisions,
        })
    }

    pub fn sensors(&self) -> usize {
        self.decisions.len()
    }
}

/// Sampled transmit waveform and receive template for one leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketWaveform {
    pub group: usize,
    /// Unit-energy transmit waveform on the grid `start + i / osf`.
    pub samples: Vec<f64>,
    /// Receive template `w(t + delta)` on the same grid.
    pub template: Vec<f64>,
    /// Time of sample 0, in `T0`.
    pub start: f64,
}

/// Precomputed waveforms for every group of a scenario.
#[derive(Debug, Clone)]
pub struct Codebook {
    waveforms: Vec<Arc<PacketWaveform>>,
    oversampling: usize,
    /// Sensor slot spacing in samples.
    slot: usize,
    level: usize,
    timing_offset: f64,
}

fn check_timing(offset: f64) -> Result<()> {
    if !(offset.is_finite() && offset.abs() < MAX_TIMING_OFFSET) {
        return Err(Error::Config(format!(
            "timing offset {offset} must satisfy |delta| < {MAX_TIMING_OFFSET} T0"
        )));
    }
    Ok(())
}

/// Largest number of taps kept on each side of the integer-lag equalizer.
pub const EQUALIZER_HALF_WIDTH: usize = 32;

/// Equalizer tails below this magnitude are dropped.
const EQUALIZER_TAIL: f64 = 1e-10;

/// Integer-lag autocorrelation `R[k]`, `k >= 0`, of a pulse sampled at
/// `oversampling` points per `T0`, normalized to `R[0] = 1`.
pub fn integer_lag_autocorrelation(
    pulse: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    oversampling: usize,
) -> Vec<f64> {
    let osf = oversampling as f64;
    let count = ((support.1 - support.0) * osf).round() as usize + 1;
    let samples: Vec<f64> = (0..count).map(|i| pulse(support.0 + i as f64 / osf)).collect();
    let lags = (support.1 - support.0).ceil() as usize;
    let r: Vec<f64> = (0..=lags)
        .map(|k| {
            let shift = k * oversampling;
            samples.iter().zip(samples.iter().skip(shift)).map(|(a, b)| a * b).sum()
        })
        .collect();
    r.iter().map(|v| v / r[0]).collect()
}

/// Inverse of the symmetric sequence `r` (`r[0]`, `r[1]`, ...) truncated to
/// `|n| <= half`, centred at index `half`. A delta sequence yields `[1]`.
pub fn equalizer_taps(r: &[f64], half: usize) -> Result<Vec<f64>> {
    const BINS: usize = 4096;
    if r.iter().skip(1).all(|v| v.abs() < 1e-13) {
        return Ok(vec![1.0]);
    }
    let spectrum: Vec<f64> = (0..BINS)
        .map(|j| {
            let w = std::f64::consts::TAU * j as f64 / BINS as f64;
            r[0] + 2.0 * r.iter().enumerate().skip(1).map(|(k, v)| v * (w * k as f64).cos()).sum::<f64>()
        })
        .collect();
    if spectrum.iter().any(|v| *v < 1e-6) {
        return Err(Error::InvalidGrid(
            "pulse autocorrelation at integer lags is not invertible".into(),
        ));
    }
    let taps: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let n = i as f64 - half as f64;
            spectrum
                .iter()
                .enumerate()
                .map(|(j, v)| (std::f64::consts::TAU * j as f64 * n / BINS as f64).cos() / v)
                .sum::<f64>()
                / BINS as f64
        })
        .collect();
    let keep = (0..=half)
        .rev()
        .find(|&n| taps[half + n].abs() >= EQUALIZER_TAIL)
        .unwrap_or(0);
    Ok(taps[half - keep..=half + keep].to_vec())
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Transmit waveform `w(t) = sum_k f[k] phi(t - k)` and its receive template
/// `sum_k g[k] phi(t - k + delta)`, where `g = f * u` and `u` inverts the
/// integer-lag autocorrelation of `phi`. The template is scaled so that
/// `<w, template> = 1` without timing offset.
fn build_waveform(
    group: usize,
    filter: &[f64],
    pulse: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    oversampling: usize,
    timing_offset: f64,
) -> Result<PacketWaveform> {
    let equalizer = equalizer_taps(
        &integer_lag_autocorrelation(pulse, support, oversampling),
        EQUALIZER_HALF_WIDTH,
    )?;
    let half = (equalizer.len() - 1) / 2;
    let dual = convolve(filter, &equalizer);
    // one T0 of margin either side absorbs the timing offset
    let start = support.0 - 1.0 - half as f64;
    let end = (filter.len() - 1) as f64 + support.1 + 1.0 + half as f64;
    let count = ((end - start) * oversampling as f64).ceil() as usize + 1;
    let osf = oversampling as f64;
    let synth = |coeffs: &[f64], origin: f64, t: f64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * pulse(t - k as f64 - origin))
            .sum()
    };
    let grid = |i: usize| start + i as f64 / osf;
    let mut samples: Vec<f64> = (0..count).map(|i| synth(filter, 0.0, grid(i))).collect();
    let aligned: Vec<f64> = (0..count).map(|i| synth(&dual, -(half as f64), grid(i))).collect();
    let mut template: Vec<f64> = if timing_offset == 0.0 {
        aligned.clone()
    } else {
        (0..count)
            .map(|i| synth(&dual, -(half as f64), grid(i) + timing_offset))
            .collect()
    };
    let energy = samples.iter().map(|v| v * v).sum::<f64>() / osf;
    let scale = energy.sqrt().recip();
    samples.iter_mut().for_each(|v| *v *= scale);
    let gain = samples.iter().zip(&aligned).map(|(a, b)| a * b).sum::<f64>() / osf;
    template.iter_mut().for_each(|v| *v /= gain);
    Ok(PacketWaveform {
        group,
        samples,
        template,
        start,
    })
}

impl Codebook {
    /// Leaf waveforms of every group in `tree` built from `sf`.
    pub fn wavelet_packets(
        tree: &WaveletPacketTree,
        sf: &ScalingFunction,
        oversampling: usize,
        timing_offset: f64,
    ) -> Result<Self> {
        if oversampling == 0 {
            return Err(Error::Config("oversampling factor must be positive".into()));
        }
        check_timing(timing_offset)?;
        let pulse = |x: f64| sf.value_at(x);
        let waveforms = tree
            .leaf_filters()
            .iter()
            .enumerate()
            .map(|(z, f)| {
                build_waveform(z, f, &pulse, sf.support, oversampling, timing_offset).map(Arc::new)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            waveforms,
            oversampling,
            slot: tree.leaf_shift() * oversampling,
            level: tree.levels(),
            timing_offset,
        })
    }

    /// Uncoded BPSK: one rectangular `T0` pulse per sensor slot, slots `T0` apart.
    pub fn bare_bpsk(oversampling: usize, timing_offset: f64) -> Result<Self> {
        if oversampling == 0 {
            return Err(Error::Config("oversampling factor must be positive".into()));
        }
        check_timing(timing_offset)?;
        let rect = |x: f64| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
        let waveform = build_waveform(0, &[1.0], &rect, (0.0, 1.0), oversampling, timing_offset)?;
        Ok(Self {
            waveforms: vec![Arc::new(waveform)],
            oversampling,
            slot: oversampling,
            level: 0,
            timing_offset,
        })
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn slot_samples(&self) -> usize {
        self.slot
    }

    pub fn groups(&self) -> usize {
        self.waveforms.len()
    }

    pub fn timing_offset(&self) -> f64 {
        self.timing_offset
    }

    pub fn waveform(&self, group: usize) -> Result<&PacketWaveform> {
        self.waveforms
            .get(group)
            .map(Arc::as_ref)
            .ok_or(Error::GroupOutOfRange {
                group,
                leaves: self.waveforms.len(),
            })
    }

    /// Samples spanned by a frame of `sensors` slots.
    pub fn frame_len(&self, group: usize, sensors: usize) -> Result<usize> {
        Ok((sensors - 1) * self.slot + self.waveform(group)?.samples.len())
    }

    pub fn encode(&self, frame: &SensorDecisionFrame) -> Result<EncodedFrame> {
        let waveform = self.waveforms.get(frame.group).cloned().ok_or(Error::GroupOutOfRange {
            group: frame.group,
            leaves: self.waveforms.len(),
        })?;
        let len = (frame.sensors() - 1) * self.slot + waveform.samples.len();
        let mut samples = vec![0.0; len];
        for (m, x) in frame.decisions.iter().enumerate() {
            let x = f64::from(*x);
            let offset = m * self.slot;
            for (out, w) in samples[offset..].iter_mut().zip(&waveform.samples) {
                *out += x * w;
            }
        }
        Ok(EncodedFrame {
            group: frame.group,
            level: self.level,
            oversampling: self.oversampling,
            slot: self.slot,
            decisions: frame.decisions.clone(),
            waveform,
            samples,
        })
    }

    /// Correlator bank: `r[n][m] = sum_i y_n[m S + i] template[i] / osf`.
    pub fn reconstruct(
        &self,
        received: &ReceivedSignal,
        group: usize,
        sensors: usize,
    ) -> Result<RecoveredFrame> {
        let waveform = self.waveform(group)?;
        let needed = (sensors - 1) * self.slot + waveform.template.len();
        if received.len() < needed {
            return Err(Error::FrameTooShort {
                needed,
                available: received.len(),
            });
        }
        let scale = (self.oversampling as f64).recip();
        let taps = &waveform.template;
        let mut values = Vec::with_capacity(received.antennas() * sensors);
        for n in 0..received.antennas() {
            let (re, im) = received.antenna(n);
            for m in 0..sensors {
                let offset = m * self.slot;
                let (mut acc_re, mut acc_im) = (0.0, 0.0);
                for ((w, a), b) in taps.iter().zip(&re[offset..]).zip(&im[offset..]) {
                    acc_re += w * a;
                    acc_im += w * b;
                }
                values.push(Complex64::new(acc_re * scale, acc_im * scale));
            }
        }
        Ok(RecoveredFrame {
            group,
            level: self.level,
            antennas: received.antennas(),
            sensors,
            values,
        })
    }

    /// Sample-domain correlation between the transmit waveform of `group`
    /// and its (offset) receive template.
    pub fn measured_gain(&self, group: usize) -> Result<f64> {
        let w = self.waveform(group)?;
        Ok(w.samples.iter().zip(&w.template).map(|(a, b)| a * b).sum::<f64>()
            / self.oversampling as f64)
    }
}

/// One group's coded frame.
#[derive(Debug, Clone)]
pub struct EncodedFrame {
    pub group: usize,
    pub level: usize,
    pub oversampling: usize,
    /// Sensor slot spacing in samples.
    pub slot: usize,
    pub decisions: Vec<i8>,
    waveform: Arc<PacketWaveform>,
    /// Superposition of all sensor streams.
    pub samples: Vec<f64>,
}

impl EncodedFrame {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sensors(&self) -> usize {
        self.decisions.len()
    }

    pub fn waveform(&self) -> &PacketWaveform {
        &self.waveform
    }

    /// Sample offset of sensor `m`'s slot.
    pub fn slot_offset(&self, m: usize) -> usize {
        m * self.slot
    }

    /// Sensor `m`'s stream `x_m w(t - m S)` over the frame.
    pub fn sensor_stream(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let x = f64::from(self.decisions[m]);
        for (o, w) in out[self.slot_offset(m)..].iter_mut().zip(&self.waveform.samples) {
            *o = x * w;
        }
        out
    }

    /// Energy `int s(t)^2 dt` in `T0` units.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>() / self.oversampling as f64
    }
}

/// Encodes one group with a freshly built waveform; see [`Codebook`] for the
/// reusable form.
pub fn encode_group(
    frame: &SensorDecisionFrame,
    tree: &WaveletPacketTree,
    sf: &ScalingFunction,
    oversampling: usize,
) -> Result<EncodedFrame> {
    if frame.group >= tree.groups() {
        return Err(Error::GroupOutOfRange {
            group: frame.group,
            leaves: tree.groups(),
        });
    }
    Codebook::wavelet_packets(tree, sf, oversampling, 0.0)?.encode(frame)
}

/// Simultaneously transmitted group frames on a common time axis.
#[derive(Debug, Clone)]
pub struct MultiplexedSignal {
    pub oversampling: usize,
    /// Frames sorted by group index.
    pub frames: Vec<EncodedFrame>,
    /// Sum of every frame, zero-padded to the longest.
    pub samples: Vec<f64>,
}

impl MultiplexedSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Superimposes group frames; each group occupies its own orthogonal leaf.
pub fn multiplex_groups(frames: Vec<EncodedFrame>) -> Result<MultiplexedSignal> {
    let first = frames
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no frames to multiplex".into()))?;
    let oversampling = first.oversampling;
    let slot = first.slot;
    if let Some(bad) = frames.iter().find(|f| f.oversampling != oversampling || f.slot != slot) {
        return Err(Error::SamplingMismatch(format!(
            "group {} has OSF {} / slot {}, expected {} / {}",
            bad.group, bad.oversampling, bad.slot, oversampling, slot
        )));
    }
    let mut frames = frames;
    frames.sort_by_key(|f| f.group);
    if frames.windows(2).any(|w| w[0].group == w[1].group) {
        return Err(Error::DimensionMismatch("a group appears twice in the multiplex".into()));
    }
    let len = frames.iter().map(EncodedFrame::len).max().unwrap_or(0);
    let mut samples = vec![0.0; len];
    for f in &frames {
        for (o, v) in samples.iter_mut().zip(&f.samples) {
            *o += v;
        }
    }
    Ok(MultiplexedSignal {
        oversampling,
        frames,
        samples,
    })
}

/// Per-antenna correlator outputs for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredFrame {
    pub group: usize,
    pub level: usize,
    pub antennas: usize,
    pub sensors: usize,
    /// Row-major `antennas x sensors`.
    pub values: Vec<Complex64>,
}

impl RecoveredFrame {
    pub fn antenna(&self, n: usize) -> &[Complex64] {
        &self.values[n * self.sensors..(n + 1) * self.sensors]
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.values[n * self.sensors + m]
    }
}

/// Template correlation gain `sum f[q] g[p] R(q - p + delta) / sum f[q] g[p] R(q - p)`
/// predicted from the scaling autocorrelation, with `g` the equalized dual
/// coefficients.
pub fn correlation_gain(filter: &[f64], table: &AutocorrelationTable, timing_offset: f64) -> Result<f64> {
    let lags = table.lags.last().copied().unwrap_or(0.0).floor().max(0.0) as usize;
    let r: Vec<f64> = (0..=lags).map(|k| table.at(k as f64) / table.at(0.0)).collect();
    let equalizer = equalizer_taps(&r, EQUALIZER_HALF_WIDTH)?;
    let half = ((equalizer.len() - 1) / 2) as f64;
    let dual = convolve(filter, &equalizer);
    let form = |delta: f64| -> f64 {
        let mut acc = 0.0;
        for (q, a) in filter.iter().enumerate() {
            for (p, b) in dual.iter().enumerate() {
                acc += a * b * table.at(q as f64 - (p as f64 - half) + delta);
            }
        }
        acc
    };
    Ok(form(timing_offset) / form(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{build_packet_tree, design_prototype_filters, ScalingKind};

    fn tree(z: usize) -> WaveletPacketTree {
        let pair = design_prototype_filters(14, 2, std::f64::consts::SQRT_2).unwrap();
        build_packet_tree(&pair, z).unwrap()
    }

    fn sf(kind: ScalingKind) -> ScalingFunction {
        ScalingFunction::standard(kind, 16.0).unwrap()
    }

    #[test]
    fn haar_samples_are_filter_coefficients() {
        let t = tree(2);
        let frame = SensorDecisionFrame::new(1, 1, vec![1]).unwrap();
        let enc = encode_group(&frame, &t, &sf(ScalingKind::Haar), 8).unwrap();
        let w = enc.waveform();
        let f = t.leaf_filter(1).unwrap();
        for (i, v) in enc.samples.iter().enumerate() {
            let time = w.start + i as f64 / 8.0;
            let k = time.floor();
            let expected = if k >= 0.0 && (k as usize) < f.len() { f[k as usize] } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "t={time}");
        }
    }

    #[test]
    fn flipping_a_decision_negates_its_slot() {
        let t = tree(4);
        let s = sf(ScalingKind::Spline);
        let a = encode_group(&SensorDecisionFrame::new(2, 2, vec![1, 1, 1]).unwrap(), &t, &s, 8).unwrap();
        let b = encode_group(&SensorDecisionFrame::new(2, 2, vec![1, -1, 1]).unwrap(), &t, &s, 8).unwrap();
        let slot = a.sensor_stream(1);
        for ((x, y), s1) in a.samples.iter().zip(&b.samples).zip(&slot) {
            assert!((x - 2.0 * s1 - y).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sensor_frame_has_unit_energy() {
        for kind in ScalingKind::ALL {
            let enc = encode_group(&SensorDecisionFrame::new(0, 2, vec![-1]).unwrap(), &tree(4), &sf(kind), 8)
                .unwrap();
            assert!((enc.energy() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range_group_and_bad_decisions() {
        let frame = SensorDecisionFrame::new(4, 2, vec![1]).unwrap();
        assert!(matches!(
            encode_group(&frame, &tree(4), &sf(ScalingKind::Haar), 8),
            Err(Error::GroupOutOfRange { group: 4, leaves: 4 })
        ));
        assert!(matches!(SensorDecisionFrame::new(0, 1, vec![1, 0]), Err(Error::InvalidDecision(0))));
    }

    #[test]
    fn multiplex_single_group_is_identity() {
        let enc = encode_group(&SensorDecisionFrame::new(1, 2, vec![1, -1]).unwrap(), &tree(4), &sf(ScalingKind::Haar), 8)
            .unwrap();
        let mux = multiplex_groups(vec![enc.clone()]).unwrap();
        assert_eq!(mux.samples, enc.samples);
    }

    #[test]
    fn multiplexed_leaves_are_orthogonal() {
        let t = tree(2);
        let s = sf(ScalingKind::Haar);
        let a = encode_group(&SensorDecisionFrame::new(0, 1, vec![1]).unwrap(), &t, &s, 8).unwrap();
        let b = encode_group(&SensorDecisionFrame::new(1, 1, vec![1]).unwrap(), &t, &s, 8).unwrap();
        let inner: f64 = a.samples.iter().zip(&b.samples).map(|(x, y)| x * y).sum::<f64>() / 8.0;
        assert!(inner.abs() < 1e-12);
        let mux = multiplex_groups(vec![b, a]).unwrap();
        assert_eq!(mux.frames[0].group, 0);
    }

    #[test]
    fn multiplex_rejects_mismatched_sampling() {
        let t = tree(2);
        let s = sf(ScalingKind::Haar);
        let a = encode_group(&SensorDecisionFrame::new(0, 1, vec![1]).unwrap(), &t, &s, 8).unwrap();
        let b = encode_group(&SensorDecisionFrame::new(1, 1, vec![1]).unwrap(), &t, &s, 4).unwrap();
        assert!(matches!(multiplex_groups(vec![a, b]), Err(Error::SamplingMismatch(_))));
    }

    #[test]
    fn bare_bpsk_pulse_is_unit_rectangle() {
        let book = Codebook::bare_bpsk(8, 0.0).unwrap();
        let w = book.waveform(0).unwrap();
        assert_eq!(w.samples.iter().filter(|v| **v != 0.0).count(), 8);
        assert!((book.measured_gain(0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_gain_tracks_measured_gain() {
        let t = tree(4);
        for kind in ScalingKind::ALL {
            let s = sf(kind);
            let table = AutocorrelationTable::dense(&s).unwrap();
            for delta in [0.0, 0.125, 0.375, -0.5] {
                let book = Codebook::wavelet_packets(&t, &s, 8, delta).unwrap();
                let predicted = correlation_gain(t.leaf_filter(1).unwrap(), &table, delta).unwrap();
                let measured = book.measured_gain(1).unwrap();
                assert!((predicted - measured).abs() < 0.02, "{kind} {delta}: {predicted} vs {measured}");
            }
        }
    }

    #[test]
    fn equalizer_inverts_spline_autocorrelation() {
        let r = [1.0, 0.25];
        let u = equalizer_taps(&r, EQUALIZER_HALF_WIDTH).unwrap();
        let full = convolve(&[0.25, 1.0, 0.25], &u);
        let centre = full.len() / 2;
        for (i, v) in full.iter().enumerate() {
            let want = if i == centre { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-9, "{i}: {v}");
        }
    }

    #[test]
    fn delta_autocorrelation_needs_no_equalizer() {
        assert_eq!(equalizer_taps(&[1.0, 0.0], 8).unwrap(), vec![1.0]);
        let rect = |x: f64| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
        assert_eq!(integer_lag_autocorrelation(&rect, (0.0, 1.0), 8), vec![1.0, 0.0]);
        assert!(equalizer_taps(&[1.0, 0.5], 8).is_err());
    }
}
