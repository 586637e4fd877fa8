//! Network deployment, large-scale gains and the multi-antenna MAC.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coding::MultiplexedSignal;
use crate::noise::NoiseRealization;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentParams {
    /// Inner annulus radius, also the pathloss reference distance (m).
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub cluster_width: f64,
    pub cluster_height: f64,
    pub pathloss_exponent: f64,
    pub shadowing_mean_db: f64,
    pub shadowing_std_db: f64,
}

impl Default for DeploymentParams {
    fn default() -> Self {
        Self {
            inner_radius: 100.0,
            outer_radius: 1000.0,
            cluster_width: 50.0,
            cluster_height: 100.0,
            pathloss_exponent: 2.0,
            shadowing_mean_db: 4.0,
            shadowing_std_db: 2.0,
        }
    }
}

impl DeploymentParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.inner_radius > 0.0
            && self.inner_radius <= self.outer_radius
            && self.outer_radius.is_finite()
            && self.cluster_width > 0.0
            && self.cluster_height > 0.0
            && self.cluster_width.is_finite()
            && self.cluster_height.is_finite();
        if !ok {
            return Err(Error::InvalidGeometry(format!(
                "need 0 < inner radius <= outer radius and a positive cluster, got radii [{}, {}], cluster {} x {}",
                self.inner_radius, self.outer_radius, self.cluster_width, self.cluster_height
            )));
        }
        if !(self.pathloss_exponent.is_finite()
            && self.shadowing_mean_db.is_finite()
            && self.shadowing_std_db >= 0.0
            && self.shadowing_std_db.is_finite())
        {
            return Err(Error::InvalidGeometry("invalid pathloss or shadowing parameters".into()));
        }
        Ok(())
    }
}

/// Fusion center at the origin, group clusters on an annulus around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    pub group_centers: Vec<[f64; 2]>,
    /// `groups x sensors` offsets relative to each group center.
    pub sensor_offsets: Vec<Vec<[f64; 2]>>,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub cluster: (f64, f64),
}

impl NetworkGeometry {
    pub fn sensor_position(&self, group: usize, sensor: usize) -> [f64; 2] {
        let c = self.group_centers[group];
        let o = self.sensor_offsets[group][sensor];
        [c[0] + o[0], c[1] + o[1]]
    }

    /// Distance to the fusion center, clamped below at the inner radius.
    pub fn sensor_distance(&self, group: usize, sensor: usize) -> f64 {
        let [x, y] = self.sensor_position(group, sensor);
        x.hypot(y).max(self.inner_radius)
    }
}

/// Radius with area-uniform density on `[inner, outer]` from a uniform `u`.
pub fn annulus_radius(u: f64, inner: f64, outer: f64) -> f64 {
    (u * (outer * outer - inner * inner) + inner * inner).sqrt()
}

fn truncated_half_normal<R: Rng + ?Sized>(rng: &mut R, extent: f64) -> f64 {
    let scale = extent / 3.0;
    loop {
        let v: f64 = rng.sample::<f64, _>(StandardNormal).abs() * scale;
        if v <= extent {
            return v;
        }
    }
}

/// Group centers area-uniform on the annulus; sensor offsets half-normal
/// (scale `extent / 3`) along each axis of the cluster rectangle, truncated
/// to the rectangle.
pub fn deploy<R: Rng + ?Sized>(
    params: &DeploymentParams,
    groups: usize,
    sensors: usize,
    rng: &mut R,
) -> Result<NetworkGeometry> {
    params.validate()?;
    let mut group_centers = Vec::with_capacity(groups);
    let mut sensor_offsets = Vec::with_capacity(groups);
    for _ in 0..groups {
        let r = annulus_radius(rng.random(), params.inner_radius, params.outer_radius);
        let angle = std::f64::consts::TAU * rng.random::<f64>();
        group_centers.push([r * angle.cos(), r * angle.sin()]);
        sensor_offsets.push(
            (0..sensors)
                .map(|_| {
                    [
                        truncated_half_normal(rng, params.cluster_width),
                        truncated_half_normal(rng, params.cluster_height),
                    ]
                })
                .collect(),
        );
    }
    Ok(NetworkGeometry {
        group_centers,
        sensor_offsets,
        inner_radius: params.inner_radius,
        outer_radius: params.outer_radius,
        cluster: (params.cluster_width, params.cluster_height),
    })
}

/// Per-sensor large-scale gains `lambda = upsilon (phi_min / phi)^eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleGains {
    pub lambda: Vec<f64>,
    pub shadowing_db: Vec<f64>,
    pub pathloss_exponent: f64,
}

impl LargeScaleGains {
    pub fn mean(&self) -> f64 {
        self.lambda.iter().sum::<f64>() / self.lambda.len() as f64
    }
}

/// Block-fading channel of one group: `G = H sqrt(D)`, `N x M`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub group: usize,
    pub antennas: usize,
    pub sensors: usize,
    pub fading: Vec<Complex64>,
    pub gains: LargeScaleGains,
    pub coefficients: Vec<Complex64>,
    pub power_scale: f64,
}

impl ChannelRealization {
    /// Builds `G` from given fading and gains.
    pub fn from_parts(
        group: usize,
        antennas: usize,
        fading: Vec<Complex64>,
        gains: LargeScaleGains,
        power_scale: f64,
    ) -> Result<Self> {
        let sensors = gains.lambda.len();
        if fading.len() != antennas * sensors {
            return Err(Error::DimensionMismatch(format!(
                "fading has {} entries, expected {antennas} x {sensors}",
                fading.len()
            )));
        }
        let roots: Vec<f64> = gains.lambda.iter().map(|l| l.sqrt()).collect();
        let coefficients = fading
            .iter()
            .enumerate()
            .map(|(i, h)| h * roots[i % sensors])
            .collect();
        Ok(Self {
            group,
            antennas,
            sensors,
            fading,
            gains,
            coefficients,
            power_scale,
        })
    }

    /// `G` of all ones with unit gains, for identity-channel checks.
    pub fn identity(group: usize, antennas: usize, sensors: usize, power_scale: f64) -> Self {
        let gains = LargeScaleGains {
            lambda: vec![1.0; sensors],
            shadowing_db: vec![0.0; sensors],
            pathloss_exponent: 0.0,
        };
        Self::from_parts(
            group,
            antennas,
            vec![Complex64::new(1.0, 0.0); antennas * sensors],
            gains,
            power_scale,
        )
        .expect("dimensions agree by construction")
    }

    pub fn coefficient(&self, n: usize, m: usize) -> Complex64 {
        self.coefficients[n * self.sensors + m]
    }

    /// Column `m` of `G`.
    pub fn column(&self, m: usize) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.antennas).map(move |n| self.coefficient(n, m))
    }

    /// `(1/N) G^H G`, row-major `M x M`.
    pub fn normalized_gram(&self) -> Vec<Complex64> {
        let (n_ant, m) = (self.antennas, self.sensors);
        let mut out = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            for j in 0..m {
                let s: Complex64 = (0..n_ant)
                    .map(|n| self.coefficient(n, i).conj() * self.coefficient(n, j))
                    .sum();
                out[i * m + j] = s / n_ant as f64;
            }
        }
        out
    }
}

/// Shadowed, pathloss-attenuated Rayleigh channel for `group`.
pub fn draw_channel<R: Rng + ?Sized>(
    geometry: &NetworkGeometry,
    group: usize,
    params: &DeploymentParams,
    antennas: usize,
    power_scale: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if group >= geometry.group_centers.len() {
        return Err(Error::GroupOutOfRange {
            group,
            leaves: geometry.group_centers.len(),
        });
    }
    if antennas == 0 {
        return Err(Error::DimensionMismatch("need at least one antenna".into()));
    }
    let shadow = Normal::new(params.shadowing_mean_db, params.shadowing_std_db)
        .map_err(|e| Error::InvalidGeometry(e.to_string()))?;
    let sensors = geometry.sensor_offsets[group].len();
    let shadowing_db: Vec<f64> = (0..sensors).map(|_| shadow.sample(rng)).collect();
    let lambda = shadowing_db
        .iter()
        .enumerate()
        .map(|(m, db)| {
            let upsilon = 10f64.powf(db / 10.0);
            upsilon * (params.inner_radius / geometry.sensor_distance(group, m)).powf(params.pathloss_exponent)
        })
        .collect();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let fading = (0..antennas * sensors)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * half, im * half)
        })
        .collect();
    let gains = LargeScaleGains {
        lambda,
        shadowing_db,
        pathloss_exponent: params.pathloss_exponent,
    };
    ChannelRealization::from_parts(group, antennas, fading, gains, power_scale)
}

/// Complex baseband samples at every antenna, row-major `antennas x len`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSignal {
    antennas: usize,
    len: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ReceivedSignal {
    pub fn zeros(antennas: usize, len: usize) -> Self {
        Self {
            antennas,
            len,
            re: vec![0.0; antennas * len],
            im: vec![0.0; antennas * len],
        }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn antenna(&self, n: usize) -> (&[f64], &[f64]) {
        let r = n * self.len..(n + 1) * self.len;
        (&self.re[r.clone()], &self.im[r])
    }

    pub fn sample(&self, n: usize, t: usize) -> Complex64 {
        Complex64::new(self.re[n * self.len + t], self.im[n * self.len + t])
    }

    pub fn energy(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|v| v * v).sum()
    }
}

/// `Y = sqrt(rho) sum_z G_z s_z + e`.
///
/// `channels[i]` carries frame `i` of `signal` (sorted by group). Each sensor
/// stream is scaled by its own channel coefficient at every antenna.
pub fn apply_mac(
    signal: &MultiplexedSignal,
    channels: &[&ChannelRealization],
    noise: Option<&NoiseRealization>,
) -> Result<ReceivedSignal> {
    if channels.len() != signal.frames.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} channels for {} group frames",
            channels.len(),
            signal.frames.len()
        )));
    }
    let antennas = channels.first().map(|c| c.antennas).unwrap_or(0);
    let len = signal.len();
    for (frame, chan) in signal.frames.iter().zip(channels) {
        if chan.antennas != antennas || chan.sensors != frame.sensors() || chan.group != frame.group {
            return Err(Error::DimensionMismatch(format!(
                "channel for group {} is {} x {}, frame has group {} with {} sensors",
                chan.group,
                chan.antennas,
                chan.sensors,
                frame.group,
                frame.sensors()
            )));
        }
    }
    let mut out = match noise {
        Some(e) => {
            if e.antennas != antennas || e.len != len {
                return Err(Error::DimensionMismatch(format!(
                    "noise is {} x {}, signal is {antennas} x {len}",
                    e.antennas, e.len
                )));
            }
            ReceivedSignal {
                antennas,
                len,
                re: e.re.clone(),
                im: e.im.clone(),
            }
        }
        None => ReceivedSignal::zeros(antennas, len),
    };
    for (frame, chan) in signal.frames.iter().zip(channels) {
        let amp = chan.power_scale.sqrt();
        let waveform = &frame.waveform().samples;
        for n in 0..antennas {
            let row = n * len;
            for m in 0..frame.sensors() {
                let c = chan.coefficient(n, m) * (amp * f64::from(frame.decisions[m]));
                let start = row + frame.slot_offset(m);
                let end = (start + waveform.len()).min(row + len);
                for ((re, im), w) in out.re[start..end]
                    .iter_mut()
                    .zip(&mut out.im[start..end])
                    .zip(waveform)
                {
                    *re += c.re * w;
                    *im += c.im * w;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{encode_group, multiplex_groups, SensorDecisionFrame};
    use crate::wavelet::{build_packet_tree, design_prototype_filters, ScalingFunction, ScalingKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn centers_lie_in_annulus_and_offsets_in_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = DeploymentParams::default();
        let g = deploy(&p, 500, 8, &mut rng).unwrap();
        for (c, offsets) in g.group_centers.iter().zip(&g.sensor_offsets) {
            let r = c[0].hypot(c[1]);
            assert!((100.0 - 1e-9..=1000.0 + 1e-9).contains(&r));
            for o in offsets {
                assert!((0.0..=50.0).contains(&o[0]) && (0.0..=100.0).contains(&o[1]));
            }
        }
    }

    #[test]
    fn degenerate_annulus_has_fixed_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = DeploymentParams {
            inner_radius: 500.0,
            outer_radius: 500.0,
            ..Default::default()
        };
        let g = deploy(&p, 50, 1, &mut rng).unwrap();
        for c in &g.group_centers {
            assert!((c[0].hypot(c[1]) - 500.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_inverted_radii() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = DeploymentParams {
            inner_radius: 1000.0,
            outer_radius: 100.0,
            ..Default::default()
        };
        assert!(matches!(deploy(&p, 1, 1, &mut rng), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn zero_shadowing_at_reference_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = DeploymentParams {
            shadowing_std_db: 0.0,
            ..Default::default()
        };
        let geometry = NetworkGeometry {
            group_centers: vec![[100.0, 0.0]],
            sensor_offsets: vec![vec![[0.0, 0.0]]],
            inner_radius: 100.0,
            outer_radius: 1000.0,
            cluster: (50.0, 100.0),
        };
        let chan = draw_channel(&geometry, 0, &p, 4, 1.0, &mut rng).unwrap();
        assert!((chan.gains.lambda[0] - 10f64.powf(0.4)).abs() < 1e-12);
        assert!((chan.gains.lambda[0] - 2.512).abs() < 1e-3);
    }

    #[test]
    fn identity_channel_passes_waveform() {
        let pair = design_prototype_filters(14, 2, std::f64::consts::SQRT_2).unwrap();
        let tree = build_packet_tree(&pair, 4).unwrap();
        let sf = ScalingFunction::standard(ScalingKind::Haar, 16.0).unwrap();
        let enc = encode_group(&SensorDecisionFrame::new(0, 2, vec![1]).unwrap(), &tree, &sf, 8).unwrap();
        let mux = multiplex_groups(vec![enc.clone()]).unwrap();
        let chan = ChannelRealization::identity(0, 3, 1, 1.0);
        let y = apply_mac(&mux, &[&chan], None).unwrap();
        for n in 0..3 {
            let (re, im) = y.antenna(n);
            assert_eq!(re, enc.samples.as_slice());
            assert!(im.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn mac_rejects_dimension_mismatch() {
        let pair = design_prototype_filters(14, 2, std::f64::consts::SQRT_2).unwrap();
        let tree = build_packet_tree(&pair, 2).unwrap();
        let sf = ScalingFunction::standard(ScalingKind::Haar, 16.0).unwrap();
        let enc = encode_group(&SensorDecisionFrame::new(0, 1, vec![1, 1]).unwrap(), &tree, &sf, 8).unwrap();
        let mux = multiplex_groups(vec![enc]).unwrap();
        let chan = ChannelRealization::identity(0, 3, 1, 1.0);
        assert!(matches!(apply_mac(&mux, &[&chan], None), Err(Error::DimensionMismatch(_))));
    }
}
