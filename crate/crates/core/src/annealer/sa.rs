use rand::Rng;
use web_time::Instant;

use super::{check_inputs, AnnealParams, Read, SampleSet, Schedule};
use crate::model::{IsingModel, SpinAssignment};
use crate::rng::{derive_seed, rng_from};
use crate::{Result, SolveResult};

/// Single-spin Metropolis annealing, one independent run per read.
///
/// At sweep `k` the inverse temperature is
/// `beta_start + s(t_k)·(beta_end − beta_start)`.
pub fn sa_sample(
    model: &IsingModel,
    schedule: &Schedule,
    params: &AnnealParams,
) -> Result<SampleSet> {
    let sweeps = check_inputs(schedule, params)?;
    let clock = Instant::now();
    let betas: Vec<f64> = schedule
        .sweep_fractions(params.sweeps_per_microsecond)
        .into_iter()
        .map(|s| params.beta_at(s))
        .collect();
    let adj = model.neighbours();
    let reads = (0..params.reads)
        .map(|r| anneal_once(model, &adj, &betas, derive_seed(params.seed, &[r as u64])))
        .collect();
    Ok(SampleSet {
        reads,
        sweeps_per_read: sweeps,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

/// Best assignment over all sweeps and reads of [`sa_sample`].
pub fn sa_solve(
    model: &IsingModel,
    schedule: &Schedule,
    params: &AnnealParams,
) -> Result<SolveResult<f64>> {
    Ok(sa_sample(model, schedule, params)?.into_solve_result(model.n()))
}

fn anneal_once(model: &IsingModel, adj: &[Vec<(usize, f64)>], betas: &[f64], seed: u64) -> Read {
    let n = model.n();
    let mut rng = rng_from(seed);
    let mut spins: Vec<i8> = (0..n)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect();
    let h = model.h();
    let mut field: Vec<f64> = (0..n)
        .map(|i| {
            h[i] + adj[i]
                .iter()
                .map(|&(j, c)| c * spins[j] as f64)
                .sum::<f64>()
        })
        .collect();
    let mut energy = model.energy_unchecked(&spins);
    let mut best = spins.clone();
    let mut best_energy = energy;

    for &beta in betas {
        for i in 0..n {
            let d_e = -2.0 * spins[i] as f64 * field[i];
            if d_e <= 0.0 || rng.gen::<f64>() < (-beta * d_e).exp() {
                spins[i] = -spins[i];
                energy += d_e;
                let s = 2.0 * spins[i] as f64;
                for &(j, c) in &adj[i] {
                    field[j] += c * s;
                }
            }
        }
        if energy < best_energy {
            best_energy = energy;
            best.copy_from_slice(&spins);
        }
    }
    // re-evaluate to drop accumulated rounding
    let energy = model.energy_unchecked(&best);
    Read {
        spins: SpinAssignment::from_spins_unchecked(best),
        energy,
    }
}
