//! Prototype filter design, the wavelet-packet binary tree and the root
//! scaling functions from which the packet waveforms are built.

mod filters;
mod scaling;
mod tree;

pub use filters::{
    design_prototype_filters, design_truncated_sinc_filters, regularity_order,
    PrototypeFilterPair, ORTHONORMALITY_TOLERANCE,
};
pub use scaling::{
    autocorrelation, sample_scaling_function, AutocorrelationTable, ScalingFunction, ScalingKind,
    DEFAULT_GRID_STEP, DEFAULT_SHANNON_EXTENT,
};
pub use tree::{build_packet_tree, WaveletPacketTree};
