//! Correlator dynamics for networks of coupled spin-1/2 cells.

pub mod analytic2;
pub mod combinatorics;
pub mod decomposition;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hierarchy;
pub mod oracle;
pub mod pauli;
pub mod sparse;
pub mod states;
