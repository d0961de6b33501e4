//! Schedule-driven samplers emulating an annealing cycle with optional pause.
//!
//! Both backends map schedule time to Monte Carlo sweeps at a fixed rate
//! (`sweeps_per_microsecond`), so a pause of `d` microseconds adds
//! `round(d × rate)` sweeps at constant anneal fraction.

mod sa;
mod schedule;
mod svmc;

use serde::{Deserialize, Serialize};

pub use sa::{sa_sample, sa_solve};
pub use schedule::{make_pause_schedule, Schedule};
pub use svmc::{svmc_energy, svmc_sample, svmc_solve};

use crate::model::{IsingModel, SpinAssignment};
use crate::{Error, Result, SolveResult};

pub const DEFAULT_SWEEPS_PER_MICROSECOND: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub sweeps_per_microsecond: u32,
    /// Inverse temperature at `s = 0`.
    pub beta_start: f64,
    /// Inverse temperature at `s = 1`.
    pub beta_end: f64,
    pub seed: u64,
    /// Independent repetitions; each derives its own random stream.
    pub reads: u32,
}

impl AnnealParams {
    /// Default rate and read count with an inverse-temperature range scaled
    /// to the model: `ln 2 / ΔE_max` (hot) to `ln 100 / ΔE_min` (cold), where
    /// `ΔE_max` bounds any single-flip change and `ΔE_min` is twice the
    /// smallest nonzero coefficient.
    pub fn for_model(model: &IsingModel, seed: u64) -> Self {
        let (beta_start, beta_end) = default_beta_range(model);
        AnnealParams {
            sweeps_per_microsecond: DEFAULT_SWEEPS_PER_MICROSECOND,
            beta_start,
            beta_end,
            seed,
            reads: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps_per_microsecond == 0 || self.reads == 0 {
            return Err(Error::invalid("sweep rate and read count must be positive"));
        }
        if !(self.beta_start > 0.0 && self.beta_end >= self.beta_start && self.beta_end.is_finite())
        {
            return Err(Error::invalid(format!(
                "need 0 < beta_start <= beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    pub(crate) fn beta_at(&self, s: f64) -> f64 {
        self.beta_start + s * (self.beta_end - self.beta_start)
    }
}

fn default_beta_range(model: &IsingModel) -> (f64, f64) {
    let mut reach = vec![0.0f64; model.n()];
    for (i, h) in model.h().iter().enumerate() {
        reach[i] += h.abs();
    }
    let mut smallest = f64::INFINITY;
    for (&(i, j), &c) in model.couplers() {
        reach[i] += c.abs();
        reach[j] += c.abs();
    }
    for v in model.h().iter().chain(model.couplers().values()) {
        if *v != 0.0 {
            smallest = smallest.min(v.abs());
        }
    }
    let max_delta = 2.0 * reach.iter().fold(0.0f64, |m, &r| m.max(r));
    if max_delta == 0.0 || !smallest.is_finite() {
        return (0.1, 1.0);
    }
    let hot = 2f64.ln() / max_delta;
    let cold = 100f64.ln() / (2.0 * smallest);
    (hot, cold.max(hot))
}

/// Best state of one read.
#[derive(Debug, Clone, PartialEq)]
pub struct Read {
    pub spins: SpinAssignment,
    pub energy: f64,
}

/// Per-read results of a sampler call.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub reads: Vec<Read>,
    pub sweeps_per_read: usize,
    pub wall_time: f64,
}

impl SampleSet {
    /// Lowest-energy read; earliest read wins ties.
    pub fn best(&self) -> &Read {
        self.reads
            .iter()
            .reduce(|a, b| if b.energy < a.energy { b } else { a })
            .expect("at least one read")
    }

    pub(crate) fn into_solve_result(self, n: usize) -> SolveResult<f64> {
        let best = self.best().clone();
        let sweeps = (self.sweeps_per_read * self.reads.len()) as u64;
        SolveResult {
            assignment: best.spins.to_binary(),
            energy: best.energy,
            iterations_used: sweeps,
            wall_time: self.wall_time,
            evaluations: sweeps * n as u64,
            chain_break_fraction: None,
        }
    }
}

pub(crate) fn check_inputs(schedule: &Schedule, params: &AnnealParams) -> Result<usize> {
    params.validate()?;
    let sweeps = schedule.sweep_count(params.sweeps_per_microsecond);
    if sweeps == 0 {
        return Err(Error::invalid("schedule is shorter than one sweep"));
    }
    Ok(sweeps)
}
