//! Simulation core for Landau-Zener sweeps of a flux qubit coupled to 1/f and
//! ohmic flux noise.
//!
//! The crate provides the coherent two-level propagator, an adiabatic master
//! equation, a polaron-frame Redfield equation in the incoherent-tunneling
//! limit, the noise spectra that drive both, the gap-extraction fit, and the
//! sweep harness used by the `lzx` command-line tool.

pub mod ame;
pub mod coherent;
pub mod config;
pub mod device;
pub mod error;
pub mod evolution;
pub mod gapfit;
pub mod harness;
pub mod interp;
pub mod linalg;
pub mod noise;
pub mod ode;
pub mod plot;
pub mod ptre;
pub mod quadrature;
pub mod units;

pub use error::{Error, Result};
