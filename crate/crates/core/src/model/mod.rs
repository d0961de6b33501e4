//! QUBO and Ising representations of the partitioning problem.

mod assignment;
mod ising;
mod npp;
mod qubo;

pub use assignment::{binary_to_spins, spins_to_binary, BinaryAssignment, SpinAssignment};
pub use ising::{ising_from_qubo, qubo_from_ising, IsingModel};
pub use npp::build_qubo;
pub use qubo::{qubo_energy, QuboFile, QuboMatrix, Weight};
