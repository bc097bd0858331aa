//! Quadratic-form optimal transport (QOT) on the real line: the cost of a
//! coupling is a double integral of a 4-argument cost over two independent
//! draws from the plan. This crate provides the closed-form couplings
//! (comonotone, antimonotone, independent, X-mixture, V, diamond), a cost
//! catalog, exact and Monte Carlo estimators, discrete solvers, brute-force
//! oracles, and a numerical verification harness for the theory's
//! predictions.

pub mod costs;
pub mod couplings;
pub mod error;
pub mod estimator;
pub mod marginals;
pub mod oracle;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
