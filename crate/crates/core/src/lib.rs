//! Harmonic moments of positive Galton–Watson branching processes with
//! possibly generation-dependent offspring laws.
//!
//! - [`gcm`]: the reference family `g_{c,m}` with its exact moment formulas.
//! - [`distributions`]: offspring laws and their comparison constants.
//! - [`process`]: simulation, Monte Carlo and quadrature of `E_k(1/Z_n^r)`.
//! - [`bernoulli`]: brackets for the limits `B_k(x)` in the two-point case.
//! - [`verify`]: batch checks of the bounds, usable from tests and the CLI.

pub mod bernoulli;
pub mod distributions;
pub mod error;
pub mod gcm;
mod par;
pub mod process;
pub mod quadrature;
pub mod roots;
pub mod verify;

pub use error::{Error, Result};
