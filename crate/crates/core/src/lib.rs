//! Wavelet-packet division multiplexing (WPDM) for distributed decision fusion.
//!
//! Sensor groups waveform-code their binary decisions onto orthogonal wavelet
//! packets, transmit over a shadowed Rayleigh multiple-access channel with
//! Gaussian plus impulsive noise, and a multi-antenna fusion center recovers
//! and fuses them. The crate provides the individual building blocks and a
//! deterministic, parallel Monte Carlo engine that emits ROC and
//! false-detection-vs-SNR tables.
//!
//! Time is measured in units of the symbol interval `T0` throughout.

pub mod channel;
pub mod cli;
pub mod coding;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod noise;
pub mod sim;
pub mod wavelet;

pub use error::{Error, Result};

/// Normalized sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}
