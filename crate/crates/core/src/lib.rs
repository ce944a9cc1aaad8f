//! cmlab: a simulation and verification laboratory for the concave majorant
//! of Brownian motion.
//!
//! The library has three layers:
//!
//! * scalar laws and closed-form density oracles ([`dist`]), grid-path
//!   samplers ([`paths`]) and exact hull geometry ([`geometry`]);
//! * the Poissonian construction of the majorant and its derived processes
//!   ([`poisson`]), plus the vertex Markov chain ([`chains`]);
//! * a hypothesis-testing toolkit ([`stats`]) and a registry of named
//!   experiments ([`experiments`]) that check every distributional identity
//!   the library implements, including Monte-Carlo evidence that 2K−B looks
//!   like a five-dimensional Bessel process.
//!
//! All randomness flows through [`rng::RngStream`]: a (seed, stream) pair
//! yields a byte-identical sample sequence regardless of thread count.

pub mod chains;
pub mod dist;
pub mod experiments;
pub mod geometry;
pub mod paths;
pub mod poisson;
pub mod quad;
pub mod rng;
pub mod stats;

use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A query point is outside the object's span.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// Malformed input data (too short, negative where forbidden, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A construction did not cover enough of the path; the hint says how
    /// much wider the window must be.
    #[error("insufficient coverage: {msg} (suggest window ratio >= {needed_ratio:.3e})")]
    Coverage { msg: String, needed_ratio: f64 },
    /// Adaptive window or horizon growth hit its cap.
    #[error("growth cap reached: {0}")]
    GrowthCap(String),
    /// Unknown experiment name.
    #[error("unknown experiment `{name}`; valid names: {valid}")]
    UnknownExperiment { name: String, valid: String },
    /// A test could not be set up (non-normalizable oracle, degenerate data).
    #[error("setup error: {0}")]
    Setup(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
