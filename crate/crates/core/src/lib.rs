//! Heat-kernel enhanced multi-view fuzzy clustering.
//!
//! This crate holds the numerical core: heat-kernel coefficients and kernel
//! distances, the centralized alternating solver, a deterministic in-process
//! federated simulation, Gaussian-mechanism privacy with additive-mask secure
//! summation, the synthetic two-view benchmark generator, and clustering
//! metrics. It is `no_std` and only needs `alloc`; file formats, the CLI and
//! everything else touching the OS live in the `fedheat` crate.
//!
//! All randomness is driven by explicit seeds, and every floating-point
//! reduction runs in a fixed order, so results are bitwise reproducible.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assignment;
pub mod cluster;
pub mod dataset;
mod error;
pub mod federation;
pub mod kernel;
pub(crate) mod math;
pub mod matrix;
pub mod metrics;
pub mod privacy;
pub mod rng;
pub mod stats;
pub mod synth;

pub use cluster::{
    fit, ClusterConfig, ClusterModel, DistanceKind, InitMethod, MembershipMatrix, ViewWeights,
};
pub use dataset::MultiViewDataset;
pub use error::{Error, Result};
pub use kernel::{HeatKernelCoeffs, HkcEstimator};
pub use matrix::Matrix;

/// Per-view cluster centers, one `c × d_h` matrix per view.
pub type Centers = alloc::vec::Vec<Matrix>;
