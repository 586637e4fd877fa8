use serde::{Deserialize, Serialize};

use super::PrototypeFilterPair;
use crate::{Error, Result};

/// Full binary wavelet-packet tree of depth `L = ceil(log2 Z)`.
///
/// Leaf `z` follows the bit path of `z` (most significant bit at the root):
/// bit 0 selects `h`, bit 1 selects `g`, and stage `i` (1-based) is upsampled
/// by `2^(i-1)`. When `Z` is not a power of two the trailing leaves are unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletPacketTree {
    levels: usize,
    groups: usize,
    leaf_filters: Vec<Vec<f64>>,
}

fn upsample(x: &[f64], factor: usize) -> Vec<f64> {
    let mut out = vec![0.0; (x.len() - 1) * factor + 1];
    for (i, v) in x.iter().enumerate() {
        out[i * factor] = *v;
    }
    out
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

pub fn build_packet_tree(pair: &PrototypeFilterPair, groups: usize) -> Result<WaveletPacketTree> {
    if groups < 2 {
        return Err(Error::TooFewGroups(groups));
    }
    let levels = groups.next_power_of_two().trailing_zeros() as usize;
    let leaf_filters = (0..groups)
        .map(|z| {
            (0..levels).fold(vec![1.0], |acc, stage| {
                let bit = (z >> (levels - 1 - stage)) & 1;
                let branch = if bit == 0 { &pair.h } else { &pair.g };
                convolve(&acc, &upsample(branch, 1 << stage))
            })
        })
        .collect();
    Ok(WaveletPacketTree {
        levels,
        groups,
        leaf_filters,
    })
}

impl WaveletPacketTree {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn leaf_filter(&self, group: usize) -> Option<&[f64]> {
        self.leaf_filters.get(group).map(Vec::as_slice)
    }

    pub fn leaf_filters(&self) -> &[Vec<f64>] {
        &self.leaf_filters
    }

    /// Shift (in `T0`) at which leaf translates are mutually orthogonal: `2^L`.
    pub fn leaf_shift(&self) -> usize {
        1 << self.levels
    }

    /// Symbol durations `T_l = 2^l T0` for `l = 1..=L`.
    pub fn level_durations(&self, t0: f64) -> Vec<f64> {
        (1..=self.levels).map(|l| (1u64 << l) as f64 * t0).collect()
    }

    /// `sum_q f_a[q] f_b[q - shift]`.
    pub fn leaf_correlation(&self, a: usize, b: usize, shift: isize) -> f64 {
        let fa = &self.leaf_filters[a];
        let fb = &self.leaf_filters[b];
        fa.iter()
            .enumerate()
            .filter_map(|(q, x)| {
                let j = q as isize - shift;
                (j >= 0 && (j as usize) < fb.len()).then(|| x * fb[j as usize])
            })
            .sum()
    }

    /// Largest leaf correlation at shifts `j 2^L`, `|j| <= max_multiple`,
    /// excluding each leaf's zero-shift energy.
    pub fn max_leaf_cross_correlation(&self, max_multiple: isize) -> f64 {
        let shift = self.leaf_shift() as isize;
        let mut worst = 0.0_f64;
        for a in 0..self.groups {
            for b in 0..self.groups {
                for j in -max_multiple..=max_multiple {
                    if a == b && j == 0 {
                        continue;
                    }
                    worst = worst.max(self.leaf_correlation(a, b, j * shift).abs());
                }
            }
        }
        worst
    }
}
