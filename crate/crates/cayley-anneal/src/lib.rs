//! Quantum annealing of Ising spins on Cayley trees of Rydberg atoms.
//!
//! The crate builds tridentate (coordination-3) tree graphs, embeds them in
//! 3D so that nearest-neighbour blockade realizes the graph couplings,
//! constructs the corresponding Rydberg/Ising Hamiltonians, and propagates
//! annealing schedules with closed (Schrödinger) and open (Lindblad or
//! quantum-trajectory) dynamics. Measurement sampling with detection errors,
//! classical phase diagrams, and weighted Gerchberg–Saxton holography for
//! producing the tweezer arrays round out the toolkit.
//!
//! Start from [`lattice::build_regular_tree`] or
//! [`lattice::build_dual_center_tree`] for the geometry, then
//! [`hamiltonian::RydbergHamiltonian`] and the `dynamics` module for time
//! evolution. The `examples/` directory contains one runnable program per
//! capability.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod groundstate;
pub mod hamiltonian;
pub mod holography;
pub mod krylov;
pub mod lattice;
pub mod measurement;
pub mod runner;
pub mod schedule;
pub mod state;
pub mod units;
pub mod util;

pub use error::{Error, Result};
