//! Numerical laboratory for Tikhonov regularization with convex penalties.
//!
//! The crate computes regularized solutions of `A x = y` for the quadratic
//! and `ℓ¹` penalties (and evaluates the closed-form ROF examples), measures
//! penalty and functional defects along the regularization parameter, and
//! checks the Bregman-distance error splitting
//!
//! ```text
//! B(x_α^δ; x†) ≤ δ²/(2α) + Ψ(α)
//! ```
//!
//! together with the index-function calculus that produces `Ψ` from a
//! variational inequality.
//!
//! Modules, bottom-up:
//!
//! - [`indexfn`]: index functions, numerical sup/inversion, Fenchel conjugates.
//! - [`linops`]: dense and diagonal operators, noise generation.
//! - [`penalties`]: quadratic and `ℓ¹` penalties, ROF geometry descriptors.
//! - [`solvers`]: closed-form and FISTA minimizers, spectral quantities.
//! - [`bregman`]: Bregman distances and the residual identities.
//! - [`harness`]: instances, sweeps, theorem checks and rate fits.
//! - [`cli`]: configuration files, CSV output and run summaries.

// `!(x > 0.0)` guards reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bregman;
pub mod cli;
pub mod error;
pub mod harness;
pub mod indexfn;
pub mod linops;
pub mod penalties;
pub mod solvers;

pub use error::{Error, Result};
