//! Link-level toolkit for RIS-assisted symbiotic radio.
//!
//! A reconfigurable intelligent surface rides a secondary bit stream on top of
//! a primary QPSK transmission by splitting its reflection pattern into a
//! symbol-invariant part (a virtual direct link that assists the primary
//! signal) and a symbol-varying part (which carries the secondary signal).
//! This crate models the composite link end to end:
//!
//! - [`channel`]: fading draws, path loss, spatial correlation, structural
//!   reflection, and the aligned reflecting gain.
//! - [`modulation`]: constellations, reflection coefficients, and the 8-point
//!   composite constellation with Gray bit labels.
//! - [`optimizer`]: closed-form max–min-distance split of the reflection
//!   pattern, plus an exhaustive grid oracle for verification.
//! - [`detector`]: joint ML detection (conventional benchmark) and the
//!   two-step composite detector, with exact bit-error accounting.
//! - [`theory`]: exact, asymptotic, and nearest-neighbor BER evaluators.
//! - [`estimation`]: least-squares channel estimation with DFT training
//!   patterns and its analytic error variance.
//! - [`engine`]: seeded, trial-parallel Monte Carlo sweeps.
//! - [`numerics`]: quadrature, root bracketing, Q/erf, and PSD matrix roots.

pub mod channel;
pub mod detector;
pub mod engine;
pub mod estimation;
pub mod modulation;
pub mod numerics;
pub mod optimizer;
pub mod theory;

use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Adaptive quadrature exhausted its refinement budget.
    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),
    /// Root bracketing failed: no sign change over the interval.
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    /// Matrix has an eigenvalue below the PSD tolerance.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    /// Non-positive distance or otherwise impossible geometry.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    /// A reflection coefficient exceeds the unit-modulus bound.
    #[error("reflection coefficient modulus {modulus} exceeds 1")]
    ModulusViolation { modulus: f64 },
    /// Aligned reflecting gain is zero; composite constellation undefined.
    #[error("degenerate channel: aligned reflecting gain is zero")]
    DegenerateChannel,
    /// A transition-point bracket contains no root (ratio too large).
    #[error("no solution: {0}")]
    NoSolution(String),
    /// Training Gram matrix is rank-deficient.
    #[error("training Gram matrix is singular")]
    SingularGram,
    /// Duplicate constellation points make neighbor sets ill-defined.
    #[error("degenerate constellation: coincident points")]
    DegenerateConstellation,
    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Failure inside a Monte Carlo trial, tagged with the trial index.
    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
