//! Simulation workbench for dipolar-coupled proton lattices on SiC surfaces.
//!
//! The crate covers the defect spin (zero-field splitting, hyperfine coupling),
//! lattice geometry, many-body Hamiltonians, ground-state structure-factor maps,
//! RF quench dynamics with and without a nearby defect, and a 1D growth model
//! for vacancy and di-vacancy depth profiles.

pub mod commands;
pub mod config;
pub mod constants;
pub mod defect;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod hamiltonian;
pub mod lanczos;
pub mod lattice;
pub mod output;
pub mod pauli;
pub mod process;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use field::FieldSpec;
