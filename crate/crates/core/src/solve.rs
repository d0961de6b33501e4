use serde::{Deserialize, Serialize};

use crate::model::BinaryAssignment;

/// Outcome of a single solver call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult<E = f64> {
    pub assignment: BinaryAssignment,
    /// Energy of `assignment`, offset included.
    pub energy: E,
    pub iterations_used: u64,
    /// Seconds of wall-clock time spent in the solver.
    pub wall_time: f64,
    /// Number of single-variable move evaluations.
    pub evaluations: u64,
    /// Fraction of non-unanimous chains, for embedded solves.
    pub chain_break_fraction: Option<f64>,
}

impl<E: PartialEq> SolveResult<E> {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.assignment == other.assignment
            && self.energy == other.energy
            && self.iterations_used == other.iterations_used
            && self.evaluations == other.evaluations
            && self.chain_break_fraction == other.chain_break_fraction
    }
}
