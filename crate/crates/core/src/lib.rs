//! Qubit-readout discrimination with path-signature features.
//!
//! Records of demodulated I/Q samples are turned into weighted paths whose
//! truncated signatures feed a random forest; the same pipeline evaluates a
//! per-class Gaussian baseline on the integrated signal and a forest on the
//! raw record. A simulator produces dispersive-readout records with state
//! transitions for testing.

pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod signature;
pub mod sim;
pub mod traces;

pub use error::{Error, Result};
