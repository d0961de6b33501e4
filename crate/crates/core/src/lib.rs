//! Hybrid QUBO decomposition for the number partitioning problem.
//!
//! The crate is organised bottom-up:
//!
//! * [`instances`] generates and evaluates partitioning instances and carries
//!   the exact subset-sum oracle used as ground truth.
//! * [`model`] holds the QUBO and Ising representations and the conversions
//!   between them.
//! * [`tabu`] is a one-flip tabu search over QUBOs.
//! * [`annealer`] provides schedule-driven samplers (simulated annealing and
//!   spin-vector Monte Carlo) with support for pauses.
//! * [`chimera`] builds Chimera graphs, clique embeddings and chain decoding.
//! * [`hybrid`] runs the subproblem decomposition loop over a pluggable backend.
//! * [`harness`] reproduces the sweep experiments and writes CSV tables.

pub mod annealer;
pub mod chimera;
mod error;
pub mod harness;
pub mod hybrid;
pub mod instances;
pub mod model;
mod rng;
mod solve;
pub mod tabu;

pub use error::{Error, Result};
pub use solve::SolveResult;
