//! Simulation and averaging toolkit for slow-fast stochastic differential equations.
//!
//! The crate is organised bottom-up:
//!
//! * [`stochastic`] random streams, correlated Brownian increments, time grids,
//!   path storage and Monte Carlo statistics.
//! * [`engine`] coefficient fields, the coupled slow-fast system, its
//!   Euler-Maruyama integrator, the Khasminskii auxiliary process and a-priori
//!   diagnostics.
//! * [`ergodic`] the frozen fast equation, invariant-measure estimation and
//!   tabulated averaged coefficients.
//! * [`lab`] simulation of the averaged equation and weak-convergence sweeps.
//! * [`finance`] the slow-fast local stochastic volatility model, measure
//!   change and option pricing against the local-volatility limit.
//! * [`catalog`] named model families used by configuration files.

// `!(x > 0.0)`-style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod engine;
pub mod ergodic;
pub mod error;
pub mod finance;
pub mod lab;
pub mod stochastic;

pub use error::{Error, Result, Warning};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
