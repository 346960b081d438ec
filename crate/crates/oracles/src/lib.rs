//! Independent ground truth for the insulated Robin eigenvalue problem.
//!
//! Interval and disk geometries with constant layer thickness admit
//! separated solutions; their spectra reduce to scalar transcendental
//! equations that are solved here to near machine precision. Nothing in this
//! crate touches a mesh.

pub mod bessel;
pub mod disk;
pub mod error;
pub mod interval;
pub mod roots;

pub use disk::{
    disk_limit_spectrum, disk_twophase_spectrum, DiskEigenvalue, DiskLimit, DiskLimitMode, DiskTwoPhase,
    DiskTwoPhaseMode, Parity,
};
pub use error::OracleError;
pub use interval::{
    interval_limit_modes, interval_limit_residual, interval_limit_spectrum, interval_twophase_spectrum,
    IntervalLimitMode, IntervalTwoPhase, IntervalTwoPhaseMode,
};
