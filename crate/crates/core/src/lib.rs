//! Simulation of continuous photon-counting receivers in a truncated Fock
//! space: exact weak-measurement Kraus operators, their jump/no-jump
//! continuum limits, displacement feedforward schedules, and the Monte Carlo
//! apparatus that drives empirical error probabilities toward the Helstrom
//! bound.

pub mod coherent;
pub mod error;
pub mod fock;
pub mod kraus;
pub mod linalg;
pub mod nogo;
pub mod quad;
pub mod trajectory;
pub mod qubit;

pub use error::{CoreError, Result};
