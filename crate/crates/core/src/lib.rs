//! Simulation and analysis toolkit for the 1→3 phase-covariant quantum
//! cloning machine: the qubit-level protocol, its photonic Fock-space
//! realization, and the coincidence-counting statistics used to measure the
//! clone fidelity.

pub mod cloning;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod io;
pub mod linalg;

pub use error::{CloningError, ExperimentError, FockError, LinalgError, ParseError};
