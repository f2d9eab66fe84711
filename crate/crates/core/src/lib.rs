//! Inference on the quasi-cointegrating space of vector autoregressions
//! whose largest characteristic roots lie near, but not necessarily at, unity.
//!
//! Modules follow the workflow: [`spectral`] splits a VAR into its
//! near-unit and stable invariant subspaces, [`representation`] derives
//! impulse responses and perturbation Jacobians, [`dgp`] builds and simulates
//! designs, [`likelihood`] fits restricted and unrestricted models,
//! [`limitdist`] tabulates the nonstandard limit law and [`inference`]
//! assembles likelihood-ratio tests and confidence sets.

pub mod dgp;
mod error;
pub mod inference;
pub mod likelihood;
pub mod limitdist;
pub mod linalg;
pub mod optim;
pub mod representation;
pub mod rng;
pub mod schur;
pub mod spectral;
pub mod stats;
pub mod sylvester;

pub use error::{Error, Result};
pub use spectral::{LambdaFamily, LambdaParam, RootSet, SpectralSplit, VarCoefficients};
