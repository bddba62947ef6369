//! Quantized Lax equations on q-deformed spin chains.
//!
//! The crate builds finite-dimensional realizations of the algebraic objects
//! behind integrable quantum chains — the constant GL_q(d) R-matrix, site
//! L-operators, partial and full monodromies, commuting transfer-matrix
//! charges, and the Lax matrices M± — and checks the exact operator
//! identities that govern them (Yang–Baxter, RTT exchange, Lax form of the
//! Heisenberg flow, factorized closed-form evolution, triangular Gauss
//! splitting) as numerical residuals against pinned tolerances.
//!
//! Entry points:
//! - [`rmatrix::RMatrix`] — R-matrix data, quantum-trace matrix, residuals.
//! - [`chain::ChainSystem`] — chain objects and Lax matrices.
//! - [`evolution`] — closed-form flows, Gauss factorization, an RK4 oracle.
//! - [`report`] — named verification suites and sweeps over parameter grids.

pub mod chain;
pub mod config;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod report;
pub mod rmatrix;
pub mod tensor;

pub use error::{Error, Result};
