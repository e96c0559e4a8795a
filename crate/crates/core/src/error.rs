//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by model construction, hierarchy evaluation, positivity
/// analysis, representation building and integration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PuError {
    #[error("frequencies must be finite and strictly positive, got {0:?}")]
    NonPositiveFrequency([f64; 3]),

    #[error("parameters (alpha={alpha}, beta={beta}, gamma={gamma}) do not admit three real positive squared frequencies")]
    ComplexFrequencies { alpha: f64, beta: f64, gamma: f64 },

    #[error("gamma is zero; J2 and J3 carry 1/gamma factors")]
    GammaZero,

    #[error("frequencies are degenerate within tolerance {tolerance:e}: {omega:?}")]
    DegenerateFrequencies { omega: [f64; 3], tolerance: f64 },

    #[error("index {index} out of range for {what}")]
    InvalidIndex { what: &'static str, index: usize },

    #[error("singular combination: {0}")]
    SingularCombination(String),

    #[error("recursion step produced a non-symmetric matrix (relative asymmetry {0:e})")]
    RecursionAsymmetry(f64),

    #[error("complex branch: {0}")]
    ComplexBranch(String),

    #[error("invalid permutation choice: {0}")]
    InvalidPermutation(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("kinetic coefficient a_{axis} is zero")]
    ZeroKinetic { axis: char },

    #[error("equation {equation} is neither PU-equivalent nor trivially vanishing as required (max residual {max_residual:e})")]
    EquivalenceFailure { equation: usize, max_residual: f64 },

    #[error("mode matrix is singular for the given degeneracy classification")]
    SingularModeMatrix,

    #[error("state became non-finite at t={time}")]
    NonFinite { time: f64 },

    #[error("invalid integration setup: {0}")]
    InvalidStep(String),

    #[error("invalid interaction: {0}")]
    InvalidInteraction(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, PuError>;
