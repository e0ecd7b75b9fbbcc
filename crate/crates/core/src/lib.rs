//! Symmetries of autonomous Hamiltonian systems in Darboux coordinates.
//!
//! The crate classifies a candidate vector field against a Hamiltonian
//! system, derives the conserved quantities that its class guarantees and
//! cross-checks every claim numerically.

pub mod classifier;
pub mod exterior;
pub mod hamiltonian;
mod linsolve;
pub mod sample;
pub mod symexpr;
pub mod verify;

mod ser;
