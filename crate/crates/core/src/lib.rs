//! Spectral toolkit for the resonant Floquet Hamiltonian
//! `H = diag(n + j^2) + delta * hop` on `Z^2`, where `hop` couples each site
//! `(j, n)` to its four diagonal neighbours `(j +- 1, n +- 1)`.
//!
//! The crate covers box restrictions of `H` ([`lattice`]), the Schur
//! complement reduction onto the resonant parabola ([`feshbach`]), the
//! single-site Newton eigenpair iteration ([`newton`]), localization and
//! spacing diagnostics ([`localization`]), and the driven Schrödinger
//! dynamics on the circle that the Floquet operator generates
//! ([`evolution`]).

pub mod eigenpair;
pub mod error;
pub mod evolution;
pub mod feshbach;
pub mod lattice;
pub mod linalg;
pub mod localization;
pub mod newton;

pub use error::{Error, Result};
