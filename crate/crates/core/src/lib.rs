//! Robust partial least squares (RPLS).
//!
//! Predictors `X` and responses `Y` are decomposed jointly as
//! `X = Q Λxᵀ + Δx` and `Y = Q Λyᵀ + Δy`, where `Q` has orthonormal columns,
//! the loadings carry a nuclear-norm penalty and the error terms an ℓ1
//! penalty. The decomposition is computed with a non-convex ADMM
//! ([`admm`]), and regression is done by projecting new samples onto the
//! recovered latent space ([`projection`]).
//!
//! Classical MLR, PCR and PLS baselines live in [`baselines`]; synthetic
//! data with outlier injection in [`datagen`]; NMSE, experiment
//! orchestration and confidence ellipses in [`eval`]; CSV and model JSON
//! in [`io`].

pub mod admm;
pub mod baselines;
pub mod datagen;
mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod projection;

pub use error::{Error, Result};

/// Dense real matrix, one row per sample and one column per variable.
pub type DenseMatrix = nalgebra::DMatrix<f64>;
