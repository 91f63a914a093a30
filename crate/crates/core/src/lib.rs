//! Dynamical decoupling of polarization qubits in birefringent fiber.
//!
//! A photon's polarization travelling through fiber dephases because the
//! birefringence varies randomly along the fiber. Half-wave plates placed at
//! chosen points act as pi pulses and undo much of that dephasing, the same
//! way spin echoes do in time. The crate has two complementary views of this:
//!
//! - Monte Carlo: [`noise`] draws random piecewise-constant fibers,
//!   [`sequence`] places plates and builds the Jones propagator, and
//!   [`ensemble`] averages the output state and reports the fidelity.
//! - Spectral: [`filter`] evaluates filter functions and integrates them
//!   against a noise spectrum to get the decoherence function `W(L)`.
//!
//! [`config`] and [`cli`] drive both from a TOML file.

pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod filter;
pub mod jones;
pub mod noise;
pub mod quadrature;
pub mod rng;
pub mod sequence;

pub use error::{Error, Result};
