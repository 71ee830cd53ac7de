//! Adiabatic elimination for Hudson–Parthasarathy quantum stochastic
//! differential equations on truncated Hilbert spaces.
//!
//! The crate is organized bottom-up:
//!
//! * [`operator`]: dense complex operators, ampliations, norms, the matrix
//!   exponential and the partial inverse `Ỹ` of the fast generator.
//! * [`model`]: coefficient families `(K, L, M, N)`, the singular scaling
//!   `k²Y + kA + B`, and validators.
//! * [`elimination`]: limit coefficients on the slow subspace.
//! * [`semigroup`]: coherent-amplitude generators, their semigroups, and
//!   exponential-vector matrix elements of the cocycle.
//! * [`convergence`]: generator residuals with the corrector `u + u₁/k +
//!   u₂/k²`, sup-over-time semigroup gaps, truncation studies, rate fits.
//! * [`models`]: Fock-space operators and the worked example fixtures.

pub mod convergence;
pub mod elimination;
pub mod error;
mod expm;
pub mod model;
pub mod models;
pub mod operator;
pub mod semigroup;

pub use error::{Error, Result};
