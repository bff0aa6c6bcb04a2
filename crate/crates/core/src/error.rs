//! Crate-wide error type.
//!
//! Construction errors (bad lattice parameters, mismatched vector lengths,
//! invalid polynomials, out-of-range evaluation times) are reported through
//! [`Error`]; shape mismatches between operators that already passed
//! construction are treated as programmer errors and panic, matching the
//! convention of the underlying matrix library.

use thiserror::Error;

/// Everything that can go wrong while assembling lattices, operators,
/// Hamiltonian families, or verification scenarios.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice function has {found} sites, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("site index {index} out of range for lattice with {sites} sites")]
    SiteOutOfRange { index: usize, sites: usize },

    #[error("evaluation time {time} outside [{lo}, {hi}]")]
    TimeOutOfRange { time: f64, lo: f64, hi: f64 },

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("ring elements have different degree caps: {left} vs {right}")]
    DegreeCapMismatch { left: usize, right: usize },

    #[error("invalid ring element: {0}")]
    InvalidRingElement(String),

    #[error("operators live on different spaces ({left} vs {right} dimensions)")]
    SpaceMismatch { left: usize, right: usize },

    #[error("invalid evolution configuration: {0}")]
    InvalidEvolution(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("residual series along {axis} is not decreasing: {series:?}")]
    ResidualNotDecreasing { axis: String, series: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
