//! Steady-state photon transport through N collective qubits strongly coupled
//! to a hot source and a cold drain bath.
//!
//! The qubits are polaron-dressed, which turns bath-mediated interactions into
//! a `-ξ J_z²` collective term, and their populations on the Dicke ladder obey
//! a tridiagonal kinetic equation with Marcus-limit rates. Full counting
//! statistics of the energy entering the drain comes from the Perron root of
//! the tilted generator.
//!
//! Module map:
//!
//! - [`model`]: parameters and the dressed energy ladder
//! - [`rates`]: closed-form Marcus rates, counting-field tilts, jump moments
//! - [`kernel_exact`]: numerical Ohmic propagator, spectra and quadrature rates
//! - [`liouvillian`]: generator assembly, steady state, Perron root
//! - [`fcs`]: flux, noise and skewness rates
//! - [`analysis`]: coupling sweeps, optimum search, scaling fits

pub mod analysis;
pub mod error;
pub mod fcs;
pub mod kernel_exact;
mod linalg;
pub mod liouvillian;
pub mod model;
pub mod rates;

pub use error::{Error, Result};
pub use model::{BathLabel, BathParams, HalfInt, Ladder, Params, SystemParams};
