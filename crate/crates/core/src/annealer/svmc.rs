use std::f64::consts::PI;

use rand::Rng;
use web_time::Instant;

use super::{check_inputs, AnnealParams, Read, SampleSet, Schedule};
use crate::model::{IsingModel, SpinAssignment};
use crate::rng::{derive_seed, rng_from};
use crate::{Result, SolveResult};

/// Driver envelope `A(s)`.
fn driver(s: f64) -> f64 {
    1.0 - s
}

/// Problem envelope `B(s)`.
fn problem(s: f64) -> f64 {
    s
}

/// Spin-vector energy `−A(s)·Σ sin θ_i + B(s)·[Σ h_i cos θ_i + Σ c_ij cos θ_i cos θ_j]`.
///
/// The offset is not included.
pub fn svmc_energy(model: &IsingModel, theta: &[f64], s: f64) -> f64 {
    let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let transverse: f64 = theta.iter().map(|t| t.sin()).sum();
    let linear: f64 = model.h().iter().zip(&cos).map(|(h, c)| h * c).sum();
    let quadratic: f64 = model
        .couplers()
        .iter()
        .map(|(&(i, j), c)| c * cos[i] * cos[j])
        .sum();
    -driver(s) * transverse + problem(s) * (linear + quadratic)
}

/// Spin-vector Monte Carlo: each spin is an angle in `[0, π]`, updated by
/// Metropolis moves whose width `π·(1 − s) + 0.05` shrinks along the schedule.
///
/// Inside the sampler the driver term is multiplied by the model's largest
/// coefficient magnitude so both terms share one energy scale; the inverse
/// temperature follows the same ramp as [`super::sa_sample`]. After every
/// sweep the state is projected to `S_i = sign(cos θ_i)` (zero maps to +1)
/// and the best projection by problem energy is kept.
pub fn svmc_sample(
    model: &IsingModel,
    schedule: &Schedule,
    params: &AnnealParams,
) -> Result<SampleSet> {
    let sweeps = check_inputs(schedule, params)?;
    let clock = Instant::now();
    let fractions = schedule.sweep_fractions(params.sweeps_per_microsecond);
    let adj = model.neighbours();
    let scale = match model.max_abs_coefficient() {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    let reads = (0..params.reads)
        .map(|r| {
            let seed = derive_seed(params.seed, &[r as u64]);
            run_once(model, &adj, &fractions, params, scale, seed)
        })
        .collect();
    Ok(SampleSet {
        reads,
        sweeps_per_read: sweeps,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

/// Best projected assignment over all sweeps and reads of [`svmc_sample`].
pub fn svmc_solve(
    model: &IsingModel,
    schedule: &Schedule,
    params: &AnnealParams,
) -> Result<SolveResult<f64>> {
    Ok(svmc_sample(model, schedule, params)?.into_solve_result(model.n()))
}

fn project(cos: &[f64], out: &mut [i8]) {
    for (o, &c) in out.iter_mut().zip(cos) {
        *o = if c >= 0.0 { 1 } else { -1 };
    }
}

fn run_once(
    model: &IsingModel,
    adj: &[Vec<(usize, f64)>],
    fractions: &[f64],
    params: &AnnealParams,
    scale: f64,
    seed: u64,
) -> Read {
    let n = model.n();
    let h = model.h();
    let mut rng = rng_from(seed);
    let mut theta = vec![PI / 2.0; n];
    let mut cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let mut projected = vec![1i8; n];
    project(&cos, &mut projected);
    let mut best = projected.clone();
    let mut best_energy = model.energy_unchecked(&best);

    for &s in fractions {
        let beta = params.beta_at(s);
        let a = driver(s) * scale;
        let b = problem(s);
        let width = PI * (1.0 - s) + 0.05;
        for i in 0..n {
            let old = theta[i];
            let mut new = old + width * rng.gen_range(-1.0..=1.0);
            if new < 0.0 {
                new = -new;
            } else if new > PI {
                new = 2.0 * PI - new;
            }
            new = new.clamp(0.0, PI);
            let local = h[i] + adj[i].iter().map(|&(j, c)| c * cos[j]).sum::<f64>();
            let new_cos = new.cos();
            let d_e = -a * (new.sin() - old.sin()) + b * local * (new_cos - cos[i]);
            if d_e <= 0.0 || rng.gen::<f64>() < (-beta * d_e).exp() {
                theta[i] = new;
                cos[i] = new_cos;
            }
        }
        project(&cos, &mut projected);
        if projected != best {
            let e = model.energy_unchecked(&projected);
            if e < best_energy {
                best_energy = e;
                best.copy_from_slice(&projected);
            }
        }
    }
    Read {
        spins: SpinAssignment::from_spins_unchecked(best),
        energy: best_energy,
    }
}
