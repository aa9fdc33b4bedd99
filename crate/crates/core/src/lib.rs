//! Redfield master equations with regularized Kossakowski matrices.
//!
//! The crate assembles the time-dependent Redfield generator of a finite
//! system coupled to a bath and makes its Kossakowski matrix positive
//! semidefinite. The resulting dynamical maps are compared through their
//! Choi operators.
//!
//! Module map:
//!
//! - [`linalg`]: Hermitian spectral tools and matrix norms.
//! - [`model`]: system and bath descriptions.
//! - [`redfield`]: `χ(t)`, `H_LS(t)` and the single-channel spectral analysis.
//! - [`regularizers`]: the positivity-restoring schemes.
//! - [`propagation`]: GKSL right-hand side and its adaptive integration.
//! - [`choi`]: Choi operators and the pointwise distance δ(t).
//! - [`reference`]: exactly solvable V-system and the qubit/oscillator validation cases.

// `!(x > 0.0)` style checks deliberately reject NaN along with the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod choi;
pub mod error;
pub mod linalg;
pub mod model;
pub mod propagation;
pub mod redfield;
pub mod reference;
pub mod regularizers;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, HermitianEig};
pub use model::{BathSpec, GammaValue, SystemModel, Time};
pub use num_complex::Complex64;

pub use choi::{ChoiOperator, Norm};
pub use propagation::{PropagatorMatrix, Trajectory};
pub use redfield::{KossakowskiData, SingleChannelSpectrum};
pub use reference::VSystemParams;
pub use regularizers::{CoarseGraining, Scheme};
