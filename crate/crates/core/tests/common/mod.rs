#![allow(dead_code)]


use num_complex::Complex64;
use wpdm_core::channel::{apply_mac, ChannelRealization};
use wpdm_core::coding::{multiplex_groups, Codebook, SensorDecisionFrame};
use wpdm_core::wavelet::{build_packet_tree, design_prototype_filters, ScalingFunction, ScalingKind};

/// Standard normal CDF by the positive-term series
/// `Phi(x) = 1/2 + phi(x) sum_n x^(2n+1) / (2n+1)!!`.
pub fn normal_cdf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut n = 0u32;
    while term.abs() > 1e-17 * sum.abs().max(1e-300) {
        n += 1;
        term *= x2 / f64::from(2 * n + 1);
        sum += term;
        if n > 10_000 {
            break;
        }
    }
    let phi = (-0.5 * x2).exp() / (2.0 * std::f64::consts::PI).sqrt();
    0.5 + phi * sum
}

pub fn q_oracle(x: f64) -> f64 {
    1.0 - normal_cdf_series(x)
}

/// Error probability of the optimal fusion of `m` ideal local decisions with
/// equal priors, by enumerating all `2^m` decision patterns.
pub fn enumerated_fusion_error(m: usize, pd: f64, pf: f64) -> f64 {
    let mut error = 0.0;
    for pattern in 0u32..(1 << m) {
        let ones = pattern.count_ones() as i32;
        let zeros = m as i32 - ones;
        let p1 = pd.powi(ones) * (1.0 - pd).powi(zeros);
        let p0 = pf.powi(ones) * (1.0 - pf).powi(zeros);
        let llr = (p1 / p0).ln();
        // H1 iff the likelihood ratio exceeds one
        if llr > 0.0 {
            error += 0.5 * p0;
        } else {
            error += 0.5 * p1;
        }
    }
    error
}

/// Codebook for `kind` on the reference prototype pair with `groups` leaves.
pub fn reference_codebook(kind: ScalingKind, groups: usize) -> Codebook {
    let pair = design_prototype_filters(14, 2, std::f64::consts::SQRT_2).unwrap();
    let tree = build_packet_tree(&pair, groups).unwrap();
    let sf = ScalingFunction::standard(kind, wpdm_core::wavelet::DEFAULT_SHANNON_EXTENT).unwrap();
    Codebook::wavelet_packets(&tree, &sf, 8, 0.0).unwrap()
}

/// Noiseless identity-channel round trip of every group's decisions; returns
/// the recovered statistics per group.
pub fn noiseless_round_trip(book: &Codebook, decisions: &[Vec<i8>], antennas: usize) -> Vec<Vec<Complex64>> {
    let level = 0;
    let frames = decisions
        .iter()
        .enumerate()
        .map(|(z, x)| book.encode(&SensorDecisionFrame::new(z, level, x.clone()).unwrap()).unwrap())
        .collect();
    let signal = multiplex_groups(frames).unwrap();
    let channels: Vec<ChannelRealization> = decisions
        .iter()
        .enumerate()
        .map(|(z, x)| ChannelRealization::identity(z, antennas, x.len(), 1.0))
        .collect();
    let refs: Vec<&ChannelRealization> = channels.iter().collect();
    let received = apply_mac(&signal, &refs, None).unwrap();
    decisions
        .iter()
        .enumerate()
        .map(|(z, x)| {
            let rec = book.reconstruct(&received, z, x.len()).unwrap();
            (0..x.len()).map(|m| rec.get(0, m)).collect()
        })
        .collect()
}

