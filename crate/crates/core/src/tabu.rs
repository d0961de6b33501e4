//! One-flip tabu search over QUBOs.

use rand::Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::model::{BinaryAssignment, QuboMatrix, Weight};
use crate::rng::rng_from;
use crate::{Error, Result, SolveResult};

/// Largest problem [`solve_exhaustive`] accepts.
pub const MAX_EXHAUSTIVE_VARIABLES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuParams {
    /// Iterations a flipped variable stays tabu.
    pub tenure: u64,
    pub max_iterations: u64,
    /// Iterations without a new best before stopping.
    pub stall_limit: u64,
    pub seed: u64,
}

impl TabuParams {
    /// Defaults for an `n`-variable problem: tenure `max(10, n/10)`.
    pub fn for_size(n: usize, seed: u64) -> Self {
        let n = n as u64;
        TabuParams {
            tenure: (n / 10).max(10),
            max_iterations: (100 * n).max(1000),
            stall_limit: (20 * n).max(500),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tenure == 0 || self.max_iterations == 0 || self.stall_limit == 0 {
            return Err(Error::invalid("tabu parameters must be positive"));
        }
        if self.tenure >= self.max_iterations {
            return Err(Error::invalid(format!(
                "tenure {} must be below max_iterations {}",
                self.tenure, self.max_iterations
            )));
        }
        Ok(())
    }
}

/// Energy change from flipping bit `i` of `x`, in O(n).
pub fn flip_gain<T: Weight>(q: &QuboMatrix<T>, x: &[u8], i: usize) -> Result<T> {
    if x.len() != q.n() {
        return Err(Error::invalid(format!(
            "assignment has {} variables, QUBO has {}",
            x.len(),
            q.n()
        )));
    }
    if i >= q.n() {
        return Err(Error::invalid(format!(
            "index {i} out of range for n = {}",
            q.n()
        )));
    }
    let mut field = q.get(i, i);
    for (j, &xj) in x.iter().enumerate() {
        if j != i && xj == 1 {
            field += q.get(i, j);
        }
    }
    Ok(if x[i] == 0 { field } else { -field })
}

/// Assignment together with maintained local fields, so that every flip
/// gain is available in O(1) and a flip costs O(n).
#[derive(Debug, Clone)]
pub struct IncrementalGains<T> {
    n: usize,
    sym: Vec<T>,
    x: Vec<u8>,
    /// `Q_ii + Σ_{j≠i} Q_ij x_j`
    field: Vec<T>,
    energy: T,
}

impl<T: Weight> IncrementalGains<T> {
    pub fn new(q: &QuboMatrix<T>, x: &[u8]) -> Result<Self> {
        let energy = q.energy(x)?;
        let n = q.n();
        let sym = q.symmetric();
        let field = (0..n)
            .map(|i| {
                let row = &sym[i * n..(i + 1) * n];
                let mut f = row[i];
                for j in (0..n).filter(|&j| j != i && x[j] == 1) {
                    f += row[j];
                }
                f
            })
            .collect();
        Ok(IncrementalGains {
            n,
            sym,
            x: x.to_vec(),
            field,
            energy,
        })
    }

    #[inline]
    pub fn gain(&self, i: usize) -> T {
        if self.x[i] == 0 {
            self.field[i]
        } else {
            -self.field[i]
        }
    }

    pub fn flip(&mut self, k: usize) {
        self.energy += self.gain(k);
        let row = &self.sym[k * self.n..(k + 1) * self.n];
        let on = self.x[k] == 0;
        self.x[k] ^= 1;
        for (i, (f, &qik)) in self.field.iter_mut().zip(row).enumerate() {
            if i != k {
                if on {
                    *f += qik;
                } else {
                    *f = *f - qik;
                }
            }
        }
    }

    pub fn energy(&self) -> T {
        self.energy
    }

    pub fn assignment(&self) -> &[u8] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Tabu search from `start` (all zeros when absent).
pub fn tabu_search<T: Weight>(
    q: &QuboMatrix<T>,
    params: &TabuParams,
    start: Option<&[u8]>,
) -> Result<SolveResult<T>> {
    tabu_search_with_trace(q, params, start).map(|(r, _)| r)
}

/// Iteration and energy at each new best.
pub type BestTrace<T> = Vec<(u64, T)>;

/// As [`tabu_search`], also returning `(iteration, energy)` at every new best.
pub fn tabu_search_with_trace<T: Weight>(
    q: &QuboMatrix<T>,
    params: &TabuParams,
    start: Option<&[u8]>,
) -> Result<(SolveResult<T>, BestTrace<T>)> {
    params.validate()?;
    let clock = Instant::now();
    let n = q.n();
    let x0 = match start {
        Some(s) => s.to_vec(),
        None => vec![0; n],
    };
    let mut state = IncrementalGains::new(q, &x0)?;
    let mut best_x = x0;
    let mut best_e = state.energy();
    let mut trace = vec![(0, best_e)];
    let at_floor = |e: T| q.energy_floor().is_some_and(|f| e <= f);

    let mut iterations = 0u64;
    let mut evaluations = 0u64;
    if n > 0 && !q.is_zero() && !at_floor(best_e) {
        let mut rng = rng_from(params.seed);
        let tenure = params.tenure;
        let mut tabu_until = vec![0u64; n];
        let mut since_best = 0u64;

        while iterations < params.max_iterations && since_best < params.stall_limit {
            iterations += 1;
            let mut chosen: Option<(usize, T)> = None;
            for (i, &until) in tabu_until.iter().enumerate() {
                let g = state.gain(i);
                let allowed = until < iterations || state.energy() + g < best_e;
                if allowed && chosen.is_none_or(|(_, cg)| g < cg) {
                    chosen = Some((i, g));
                }
            }
            evaluations += n as u64;
            let k = match chosen {
                Some((k, _)) => k,
                // every move tabu: release the one expiring first
                None => (0..n).min_by_key(|&i| tabu_until[i]).expect("n > 0"),
            };
            state.flip(k);
            tabu_until[k] = iterations + tenure + rng.gen_range(0..=tenure / 4);

            if state.energy() < best_e {
                best_e = state.energy();
                best_x.copy_from_slice(state.assignment());
                trace.push((iterations, best_e));
                since_best = 0;
                if at_floor(best_e) {
                    break;
                }
            } else {
                since_best += 1;
            }
        }
    }

    let result = SolveResult {
        assignment: BinaryAssignment::from_bits_unchecked(best_x),
        energy: best_e,
        iterations_used: iterations,
        wall_time: clock.elapsed().as_secs_f64(),
        evaluations,
        chain_break_fraction: None,
    };
    Ok((result, trace))
}

/// Exact minimum by Gray-code enumeration of all `2^n` assignments.
/// The first minimiser in Gray order is returned; enumeration stops early
/// once the QUBO's energy floor is reached.
pub fn solve_exhaustive<T: Weight>(q: &QuboMatrix<T>) -> Result<SolveResult<T>> {
    let n = q.n();
    if n > MAX_EXHAUSTIVE_VARIABLES {
        return Err(Error::ResourceLimit(format!(
            "exhaustive search over {n} variables exceeds the limit of {MAX_EXHAUSTIVE_VARIABLES}"
        )));
    }
    let clock = Instant::now();
    let mut state = IncrementalGains::new(q, &vec![0; n])?;
    let mut best_x = vec![0; n];
    let mut best_e = state.energy();
    let floor = q.energy_floor();
    let at_floor = |e: T| floor.is_some_and(|f| e <= f);
    let mut steps = 0u64;
    while steps + 1 < 1u64 << n && !at_floor(best_e) {
        steps += 1;
        state.flip(steps.trailing_zeros() as usize);
        if state.energy() < best_e {
            best_e = state.energy();
            best_x.copy_from_slice(state.assignment());
        }
    }
    Ok(SolveResult {
        assignment: BinaryAssignment::from_bits_unchecked(best_x),
        energy: best_e,
        iterations_used: steps,
        wall_time: clock.elapsed().as_secs_f64(),
        evaluations: steps,
        chain_break_fraction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate_perfect, optimal_delta, NppInstance};
    use crate::model::build_qubo;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn npp(values: &[u64]) -> QuboMatrix<i64> {
        build_qubo(&NppInstance::new(values.to_vec(), 0).unwrap()).unwrap()
    }

    fn brute_min(q: &QuboMatrix<i64>) -> i64 {
        let n = q.n();
        (0u32..1 << n)
            .map(|m| {
                let x: Vec<u8> = (0..n).map(|i| (m >> i & 1) as u8).collect();
                q.energy(&x).unwrap()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn flip_gain_examples() {
        let q = npp(&[1, 2]);
        assert_eq!(flip_gain(&q, &[0, 0], 0).unwrap(), 1 - 9);
        let flat = QuboMatrix::<f64>::new(3);
        for i in 0..3 {
            assert_eq!(flip_gain(&flat, &[1, 0, 1], i).unwrap(), 0.0);
        }
        assert!(flip_gain(&q, &[0, 0], 2).is_err());
        assert!(flip_gain(&q, &[0], 0).is_err());
    }

    #[test]
    fn double_flip_cancels() {
        let q = npp(&[3, 5, 7, 2]);
        let mut x = vec![1, 0, 1, 0];
        for i in 0..4 {
            let g1 = flip_gain(&q, &x, i).unwrap();
            x[i] ^= 1;
            let g2 = flip_gain(&q, &x, i).unwrap();
            x[i] ^= 1;
            assert_eq!(g1 + g2, 0);
        }
    }

    #[test]
    fn solves_two_element_instance() {
        let q = npp(&[1, 2]);
        for seed in 0..5 {
            let r = tabu_search(&q, &TabuParams::for_size(2, seed), None).unwrap();
            assert_eq!(r.energy, 1);
            assert_eq!(q.energy(r.assignment.as_slice()).unwrap(), 1);
        }
    }

    #[test]
    fn flat_problem_stops_immediately() {
        let q = QuboMatrix::<f64>::new(5).with_energy_floor(None);
        let mut q = q;
        q.set_offset(2.5);
        let r = tabu_search(&q, &TabuParams::for_size(5, 0), None).unwrap();
        assert_eq!(r.energy, 2.5);
        assert_eq!(r.iterations_used, 0);
    }

    #[test]
    fn never_worse_than_start() {
        let inst = generate_perfect(20, 50, 4).unwrap();
        let q = build_qubo(&inst).unwrap();
        let start: Vec<u8> = (0..20).map(|i| (i % 3 == 0) as u8).collect();
        let e0 = q.energy(&start).unwrap();
        let p = TabuParams {
            max_iterations: 30,
            ..TabuParams::for_size(20, 1)
        };
        let r = tabu_search(&q, &p, Some(&start)).unwrap();
        assert!(r.energy <= e0);
    }

    #[test]
    fn finds_zero_on_perfect_sixteen() {
        let inst = generate_perfect(16, 100, 9).unwrap();
        assert_eq!(optimal_delta(&inst).unwrap(), 0);
        let q = build_qubo(&inst).unwrap();
        let hits = (0..5)
            .filter(|&s| {
                let p = TabuParams {
                    max_iterations: 20_000,
                    stall_limit: 20_000,
                    ..TabuParams::for_size(16, s)
                };
                tabu_search(&q, &p, None).unwrap().energy == 0
            })
            .count();
        assert!(hits >= 1);
    }

    #[test]
    fn small_problems_reach_enumeration_optimum() {
        // >= 95 of 100 seeded runs must hit the exact optimum
        let mut hits = 0;
        for seed in 0..100u64 {
            let n = 6 + (seed % 9) as usize;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=60)).collect();
            let q = npp(&values);
            let p = TabuParams {
                max_iterations: 50 * n as u64,
                stall_limit: 50 * n as u64,
                ..TabuParams::for_size(n, seed)
            };
            if tabu_search(&q, &p, None).unwrap().energy == brute_min(&q) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 runs reached the optimum");
    }

    #[test]
    fn deterministic_per_seed() {
        let q = build_qubo(&generate_perfect(30, 200, 2).unwrap()).unwrap();
        let p = TabuParams::for_size(30, 17);
        let a = tabu_search(&q, &p, None).unwrap();
        let b = tabu_search(&q, &p, None).unwrap();
        assert!(a.same_outcome(&b));
    }

    #[test]
    fn best_trace_is_nonincreasing() {
        let q = build_qubo(&generate_perfect(40, 500, 8).unwrap()).unwrap();
        let (r, trace) = tabu_search_with_trace(&q, &TabuParams::for_size(40, 3), None).unwrap();
        assert!(trace
            .windows(2)
            .all(|w| w[1].1 <= w[0].1 && w[1].0 > w[0].0));
        assert_eq!(trace.last().unwrap().1, r.energy);
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        let q = npp(&[3, 1, 1, 7, 2, 9]);
        let r = solve_exhaustive(&q).unwrap();
        assert_eq!(r.energy, brute_min(&q));
        assert_eq!(q.energy(r.assignment.as_slice()).unwrap(), r.energy);
        assert!(solve_exhaustive(&QuboMatrix::<f64>::new(31)).is_err());
    }

    #[test]
    fn params_validation() {
        let mut p = TabuParams::for_size(10, 0);
        p.tenure = p.max_iterations;
        assert!(p.validate().is_err());
        p.tenure = 0;
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn incremental_gains_match_recomputation(
            n in 1usize..64,
            seed: u64,
            moves in prop::collection::vec(0usize..64, 0..80),
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut q = QuboMatrix::<i64>::new(n);
            for i in 0..n {
                for j in i..n {
                    q.add(i, j, rng.gen_range(-50..=50));
                }
            }
            let x0: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            let mut state = IncrementalGains::new(&q, &x0).unwrap();
            for m in moves {
                state.flip(m % n);
            }
            let x = state.assignment().to_vec();
            prop_assert_eq!(state.energy(), q.energy(&x).unwrap());
            for i in 0..n {
                prop_assert_eq!(state.gain(i), flip_gain(&q, &x, i).unwrap());
            }
        }
    }
}
