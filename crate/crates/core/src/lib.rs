//! Precision limits for estimating the CSL collapse diffusion rate Λ in a
//! two-cavity optomechanical setup.
//!
//! The crate evolves the 6×6 quadrature covariance matrix of a mechanical
//! mode and two cavity modes, ordered `(Q, P, X1, Y1, X2, Y2)`, together with
//! its exact derivative with respect to Λ, and turns single-mode blocks of it
//! into classical (Gaussian POVM) and quantum Fisher information.
//!
//! Modules, bottom-up:
//! - [`gaussian`]: covariance matrices, symplectic form, beam splitters.
//! - [`dynamics`]: drift/diffusion matrices, Lyapunov evolution, steady state.
//! - [`estimation`]: CFI and QFI, plus a Fock-space fidelity oracle.
//! - [`csl`]: the CSL diffusion rate from the collapse parameters.
//! - [`scenario`]: config files, the transient and steady-state experiments,
//!   CSV output.

pub mod constants;
pub mod csl;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod scenario;

pub use error::{Error, Result};

/// Tool version, part of every result hash.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
