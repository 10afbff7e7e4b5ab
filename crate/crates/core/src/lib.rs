//! Simulation core for a nonreciprocal two-chain micro-resonator array joined
//! through a single interface resonator.
//!
//! - [`model`]: site layout, couplings and the Hamiltonian
//! - [`spectra`]: eigenanalysis, IPR, zero modes and closed-form states
//! - [`dynamics`]: non-unitary time evolution and pulse diagnostics
//! - [`response`]: driven steady-state frequency scans

pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod response;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
