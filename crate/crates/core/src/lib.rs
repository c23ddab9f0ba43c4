//! Coordinated multicell OFDMA downlink resource allocation.
//!
//! The library models a downlink with `K_t` multi-antenna transmitters that
//! serve `K_r` single-antenna terminals over `K_c` independent subcarriers.
//! Dynamic cooperation clusters decide which transmitters serve a terminal
//! with data and which merely coordinate interference towards it. On top of
//! that model the crate provides:
//!
//! - SINR computation for coherent joint transmission, incoherent reception,
//!   and the virtual uplink ([`sinr`]);
//! - the dual-parameter precoding map from multipliers `(omega, lambda)` to
//!   beamformers, SINR levels, and downlink powers ([`param`]);
//! - a solver for the QoS feasibility problem via uplink-downlink duality
//!   ([`dual`]);
//! - centralized (CVSINR) and distributed (DVSINR) allocation strategies plus
//!   coordinated-ZF and single-cell baselines ([`strategies`]);
//! - desk-scale brute-force references ([`oracle`]);
//! - synthetic Rayleigh channel generation and the phase-error perturbation
//!   model ([`channels`]).

pub mod channels;
pub mod dual;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod param;
pub mod scenarios;
pub mod sinr;
pub mod strategies;

mod error;

pub use error::CoreError;
pub use model::{
    ChannelSet, ClusterConfig, Dimensions, PowerConstraintSet, Scenario, SelectionMasks,
};
pub use param::{DualParams, RealizedAllocation};
pub use sinr::{Allocation, Constellation, QualityFunction, UtilityConfig, UtilityKind};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Result alias for fallible operations in this crate.
pub type Result<T> = std::result::Result<T, CoreError>;
