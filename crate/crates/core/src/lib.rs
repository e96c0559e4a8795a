//! Tri-Hamiltonian structure of the sixth-order Pais–Uhlenbeck oscillator
//! `q⁽⁶⁾ + α q⁽⁴⁾ + β q̈ + γ q = 0`.
//!
//! The crate exposes the flow, three compatible Poisson tensors with their
//! Hamiltonians, the six linear Lie symmetries, the infinite hierarchy of
//! conserved quantities, positive-definite combinations, second-order 3D
//! representations and a small dynamics toolkit.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hierarchy;
pub mod model;
pub mod positivity;
pub mod representations;
pub mod sampling;
pub mod symmetries;

pub use error::{PuError, Result};
pub use model::{
    CanonicalState, Degeneracy, FrequencyTriple, LinearOperator, Mat6, ModelSpec, PUParams,
    PoissonTensor, QuadraticForm, StateVector, TensorKind,
};
