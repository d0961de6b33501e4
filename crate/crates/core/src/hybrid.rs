//! Subqubo decomposition: pick influential variables, clamp the rest, solve
//! the reduced problem with a backend and merge improvements.

use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::annealer::{
    sa_sample, sa_solve, svmc_solve, AnnealParams, Schedule, DEFAULT_SWEEPS_PER_MICROSECOND,
};
use crate::chimera::{
    chain_break_fraction, chimera_graph, clique_capacity, clique_embedding, default_chain_strength,
    embed_ising, unembed,
};
use crate::model::{ising_from_qubo, BinaryAssignment, IsingModel, QuboMatrix, Weight};
use crate::rng::{derive_seed, rng_from};
use crate::tabu::{solve_exhaustive, tabu_search, IncrementalGains, TabuParams};
use crate::{Error, Result, SolveResult};

/// Default share of subproblem slots filled at random.
pub const DEFAULT_RANDOM_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Tabu,
    Sa,
    Svmc,
    EmbeddedSa,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tabu" => Ok(Backend::Tabu),
            "sa" => Ok(Backend::Sa),
            "svmc" => Ok(Backend::Svmc),
            "embedded_sa" | "embedded-sa" => Ok(Backend::EmbeddedSa),
            other => Err(Error::invalid(format!("unknown backend `{other}`"))),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Tabu => "tabu",
            Backend::Sa => "sa",
            Backend::Svmc => "svmc",
            Backend::EmbeddedSa => "embedded_sa",
        })
    }
}

/// Settings handed to the backend for every subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendParams {
    /// Tabu settings; derived from the subproblem size when absent.
    pub tabu: Option<TabuParams>,
    /// Subproblems up to this size are enumerated exactly by the tabu backend.
    pub exhaustive_limit: usize,
    pub sweeps_per_microsecond: u32,
    pub reads: u32,
    pub schedule: Schedule,
    /// `(beta_start, beta_end)`; scaled to each subproblem when absent.
    pub beta_range: Option<(f64, f64)>,
    /// Chimera size for the embedded backend; smallest fitting size when absent.
    pub chimera_m: Option<usize>,
    pub chain_strength: Option<f64>,
}

impl Default for BackendParams {
    fn default() -> Self {
        BackendParams {
            tabu: None,
            exhaustive_limit: 20,
            sweeps_per_microsecond: DEFAULT_SWEEPS_PER_MICROSECOND,
            reads: 10,
            schedule: Schedule::linear(20.0).expect("valid ramp"),
            beta_range: None,
            chimera_m: None,
            chain_strength: None,
        }
    }
}

impl BackendParams {
    fn anneal_params(&self, model: &IsingModel, seed: u64) -> AnnealParams {
        let auto = AnnealParams::for_model(model, seed);
        let (beta_start, beta_end) = self.beta_range.unwrap_or((auto.beta_start, auto.beta_end));
        AnnealParams {
            sweeps_per_microsecond: self.sweeps_per_microsecond,
            beta_start,
            beta_end,
            seed,
            reads: self.reads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridParams {
    /// Unclamped variables per subproblem.
    pub subproblem_size: usize,
    pub backend: Backend,
    pub max_rounds: usize,
    /// Rounds without improvement before stopping.
    pub stall_rounds: usize,
    pub seed: u64,
    /// Share of the subproblem chosen uniformly at random.
    pub random_fraction: f64,
    pub backend_params: BackendParams,
}

impl HybridParams {
    pub fn new(subproblem_size: usize, backend: Backend, seed: u64) -> Self {
        HybridParams {
            subproblem_size,
            backend,
            max_rounds: 50,
            stall_rounds: 20,
            seed,
            random_fraction: DEFAULT_RANDOM_FRACTION,
            backend_params: BackendParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bp = &self.backend_params;
        if bp.sweeps_per_microsecond == 0 || bp.reads == 0 {
            return Err(Error::invalid(
                "sweeps_per_microsecond and reads must be positive",
            ));
        }
        if self.subproblem_size == 0 || self.max_rounds == 0 || self.stall_rounds == 0 {
            return Err(Error::invalid(
                "subproblem_size, max_rounds and stall_rounds must be positive",
            ));
        }
        if self.stall_rounds > self.max_rounds {
            return Err(Error::invalid(format!(
                "stall_rounds {} exceeds max_rounds {}",
                self.stall_rounds, self.max_rounds
            )));
        }
        if bp.chimera_m == Some(0) {
            return Err(Error::invalid("chimera_m must be positive"));
        }
        if !(0.0..=1.0).contains(&self.random_fraction) {
            return Err(Error::invalid(format!(
                "random_fraction {} outside [0, 1]",
                self.random_fraction
            )));
        }
        Ok(())
    }
}

impl Default for HybridParams {
    fn default() -> Self {
        HybridParams::new(16, Backend::Tabu, 0)
    }
}

/// One decomposition round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Weight")]
pub struct RoundRecord<T> {
    pub round_index: usize,
    pub selected_variables: Vec<usize>,
    pub energy_before: T,
    pub energy_after: T,
    /// Seconds spent in the backend.
    pub backend_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridOutcome<T> {
    pub result: SolveResult<T>,
    pub rounds: Vec<RoundRecord<T>>,
}

/// Write one JSON object per round.
pub fn write_round_trace<T: Weight, W: Write>(rounds: &[RoundRecord<T>], mut out: W) -> Result<()> {
    for r in rounds {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// `k` indices ranked by descending `|flip gain|` (lowest index first on
/// ties), with `round(random_fraction·k)` of them replaced by uniformly
/// drawn unselected indices. The result is sorted.
pub fn select_subproblem<T: Weight, R: Rng + ?Sized>(
    q: &QuboMatrix<T>,
    x: &[u8],
    k: usize,
    rng: &mut R,
    random_fraction: f64,
) -> Result<Vec<usize>> {
    let n = q.n();
    if k > n {
        return Err(Error::invalid(format!(
            "subproblem size {k} exceeds {n} variables"
        )));
    }
    let gains = IncrementalGains::new(q, x)?;
    if k == n {
        return Ok((0..n).collect());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ga, gb) = (gains.gain(a).abs(), gains.gain(b).abs());
        gb.partial_cmp(&ga)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let n_random = ((random_fraction * k as f64).round() as usize).min(k);
    let greedy = k - n_random;
    let mut chosen: Vec<usize> = order[..greedy].to_vec();
    let rest = &order[greedy..];
    chosen.extend(
        index::sample(rng, rest.len(), n_random)
            .into_iter()
            .map(|i| rest[i]),
    );
    chosen.sort_unstable();
    Ok(chosen)
}

/// Reduce `q` to the variables in `free`, fixing all others at their value in `x`.
///
/// Variable `a` of the result is `free[a]`. Energies agree with the full
/// problem on every completion of `x`.
pub fn clamp<T: Weight>(q: &QuboMatrix<T>, x: &[u8], free: &[usize]) -> Result<QuboMatrix<T>> {
    let n = q.n();
    if x.len() != n {
        return Err(Error::invalid(format!(
            "assignment has {} variables, QUBO has {n}",
            x.len()
        )));
    }
    let mut is_free = vec![false; n];
    for &i in free {
        if i >= n {
            return Err(Error::invalid(format!(
                "free index {i} out of range for n = {n}"
            )));
        }
        if std::mem::replace(&mut is_free[i], true) {
            return Err(Error::invalid(format!("free index {i} listed twice")));
        }
    }

    let k = free.len();
    let mut sub = QuboMatrix::new(k);
    for (a, &i) in free.iter().enumerate() {
        let mut diag = q.get(i, i);
        for j in (0..n).filter(|&j| !is_free[j] && x[j] == 1) {
            diag += q.get(i, j);
        }
        sub.add(a, a, diag);
        for (b, &j) in free.iter().enumerate().skip(a + 1) {
            sub.add(a, b, q.get(i, j));
        }
    }
    let mut offset = q.offset();
    let fixed_on: Vec<usize> = (0..n).filter(|&j| !is_free[j] && x[j] == 1).collect();
    for (a, &i) in fixed_on.iter().enumerate() {
        for &j in &fixed_on[a..] {
            offset += q.get(i, j);
        }
    }
    sub.set_offset(offset);
    Ok(sub.with_energy_floor(q.energy_floor()))
}

/// Solve `q` with `backend`, starting from `start` where the backend uses one.
/// The returned energy is evaluated exactly on `q`.
pub fn solve_with_backend<T: Weight>(
    q: &QuboMatrix<T>,
    start: &[u8],
    backend: Backend,
    params: &BackendParams,
    seed: u64,
) -> Result<SolveResult<T>> {
    let n = q.n();
    if n == 0 || q.is_zero() {
        let energy = q.energy(start)?;
        return Ok(SolveResult {
            assignment: BinaryAssignment::try_from(start.to_vec())?,
            energy,
            iterations_used: 0,
            wall_time: 0.0,
            evaluations: 0,
            chain_break_fraction: None,
        });
    }
    let relabel = |r: SolveResult<f64>| -> Result<SolveResult<T>> {
        let energy = q.energy(r.assignment.as_slice())?;
        Ok(SolveResult {
            energy,
            assignment: r.assignment,
            iterations_used: r.iterations_used,
            wall_time: r.wall_time,
            evaluations: r.evaluations,
            chain_break_fraction: r.chain_break_fraction,
        })
    };
    match backend {
        Backend::Tabu if n <= params.exhaustive_limit => solve_exhaustive(q),
        Backend::Tabu => {
            let tp = TabuParams {
                seed,
                ..params.tabu.unwrap_or_else(|| TabuParams::for_size(n, seed))
            };
            tabu_search(q, &tp, Some(start))
        }
        Backend::Sa => {
            let model = ising_from_qubo(q);
            relabel(sa_solve(
                &model,
                &params.schedule,
                &params.anneal_params(&model, seed),
            )?)
        }
        Backend::Svmc => {
            let model = ising_from_qubo(q);
            relabel(svmc_solve(
                &model,
                &params.schedule,
                &params.anneal_params(&model, seed),
            )?)
        }
        Backend::EmbeddedSa => relabel(embedded_sa(q, params, seed)?),
    }
}

fn embedded_sa<T: Weight>(
    q: &QuboMatrix<T>,
    params: &BackendParams,
    seed: u64,
) -> Result<SolveResult<f64>> {
    let clock = Instant::now();
    let n = q.n();
    let m = params.chimera_m.unwrap_or_else(|| n.div_ceil(4).max(1));
    let target = chimera_graph(m)?;
    if n > clique_capacity(m) {
        return Err(Error::Capacity {
            requested: n,
            max: clique_capacity(m),
            m,
        });
    }
    let logical = ising_from_qubo(q);
    let embedding = clique_embedding(n, &target)?;
    let strength = match params.chain_strength {
        Some(s) => s,
        None => match default_chain_strength(&logical) {
            s if s > 0.0 => s,
            _ => 1.0,
        },
    };
    let embedded = embed_ising(&logical, &embedding, strength, &target)?;
    let anneal = params.anneal_params(&embedded.physical, seed);
    let samples = sa_sample(&embedded.physical, &params.schedule, &anneal)?;

    let mut best: Option<(f64, Vec<i8>, f64)> = None;
    for read in &samples.reads {
        let phys = read.spins.as_slice();
        let spins = unembed(phys, &embedding)?;
        let energy = logical.energy(spins.as_slice())?;
        if best.as_ref().is_none_or(|b| energy < b.0) {
            best = Some((
                energy,
                spins.into_inner(),
                chain_break_fraction(phys, &embedding),
            ));
        }
    }
    let (energy, spins, breaks) = best.expect("at least one read");
    let sweeps = (samples.sweeps_per_read * samples.reads.len()) as u64;
    Ok(SolveResult {
        assignment: BinaryAssignment::from_bits_unchecked(
            spins.iter().map(|&s| ((s + 1) / 2) as u8).collect(),
        ),
        energy,
        iterations_used: sweeps,
        wall_time: clock.elapsed().as_secs_f64(),
        evaluations: sweeps * target.node_count() as u64,
        chain_break_fraction: Some(breaks),
    })
}

/// Run the decomposition loop on `q`.
///
/// The start is a random assignment improved by a full-size tabu pass.
/// Each round solves a clamped subproblem and keeps the result when the
/// composite energy does not increase. The loop ends after `max_rounds`,
/// after `stall_rounds` rounds without a new best, or at the energy floor.
/// When the subproblem covers the whole problem a single backend call on
/// the full QUBO replaces the loop.
pub fn decompose_solve<T: Weight>(
    q: &QuboMatrix<T>,
    params: &HybridParams,
) -> Result<HybridOutcome<T>> {
    params.validate()?;
    let clock = Instant::now();
    let n = q.n();
    if let (Backend::EmbeddedSa, Some(m)) = (params.backend, params.backend_params.chimera_m) {
        let requested = params.subproblem_size.min(n);
        if requested > clique_capacity(m) {
            return Err(Error::Capacity {
                requested,
                max: clique_capacity(m),
                m,
            });
        }
    }
    let mut rng = rng_from(derive_seed(params.seed, &[u64::MAX]));
    let mut x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
    let mut energy = q.energy(&x)?;
    let mut rounds = Vec::new();
    let mut evaluations = 0u64;
    let mut breaks = None;

    if params.subproblem_size >= n {
        let sub = solve_with_backend(
            q,
            &x,
            params.backend,
            &params.backend_params,
            round_seed(params.seed, 0),
        )?;
        evaluations += sub.evaluations;
        breaks = sub.chain_break_fraction;
        let before = energy;
        if sub.energy <= energy {
            x = sub.assignment.into_inner();
            energy = sub.energy;
        }
        rounds.push(RoundRecord {
            round_index: 0,
            selected_variables: (0..n).collect(),
            energy_before: before,
            energy_after: energy,
            backend_time: sub.wall_time,
        });
    } else {
        let tp = TabuParams::for_size(n, derive_seed(params.seed, &[u64::MAX - 1]));
        let warm = tabu_search(q, &tp, Some(&x))?;
        evaluations += warm.evaluations;
        x = warm.assignment.into_inner();
        energy = warm.energy;

        let mut stall = 0;
        let at_floor = |e: T| q.energy_floor().is_some_and(|f| e <= f);
        for r in 0..params.max_rounds {
            if at_floor(energy) {
                break;
            }
            let free = select_subproblem(
                q,
                &x,
                params.subproblem_size,
                &mut rng,
                params.random_fraction,
            )?;
            let sub_q = clamp(q, &x, &free)?;
            let sub_start: Vec<u8> = free.iter().map(|&i| x[i]).collect();
            let sub = solve_with_backend(
                &sub_q,
                &sub_start,
                params.backend,
                &params.backend_params,
                round_seed(params.seed, r),
            )?;
            evaluations += sub.evaluations;
            let before = energy;
            if sub.energy <= energy {
                for (&i, &b) in free.iter().zip(sub.assignment.as_slice()) {
                    x[i] = b;
                }
                energy = sub.energy;
                breaks = sub.chain_break_fraction.or(breaks);
            }
            debug_assert!(q.energy(&x).is_ok_and(|e| e == energy));
            rounds.push(RoundRecord {
                round_index: r,
                selected_variables: free,
                energy_before: before,
                energy_after: energy,
                backend_time: sub.wall_time,
            });
            if energy < before {
                stall = 0;
            } else {
                stall += 1;
                if stall >= params.stall_rounds {
                    break;
                }
            }
        }
    }

    Ok(HybridOutcome {
        result: SolveResult {
            assignment: BinaryAssignment::from_bits_unchecked(x),
            energy,
            iterations_used: rounds.len() as u64,
            wall_time: clock.elapsed().as_secs_f64(),
            evaluations,
            chain_break_fraction: breaks,
        },
        rounds,
    })
}

/// Backend seed for round `r`.
pub fn round_seed(seed: u64, round: usize) -> u64 {
    derive_seed(seed, &[round as u64])
}
