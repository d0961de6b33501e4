//! WebAssembly bindings for the browser demo.
//!
//! Each exported function returns a JSON string. The `*_json` functions
//! hold the logic and are callable from native code.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use subqubo::annealer::make_pause_schedule;
use subqubo::hybrid::{decompose_solve, Backend, HybridParams};
use subqubo::instances::{delta, generate_perfect, histogram, optimal_delta};
use subqubo::model::build_qubo;

/// Largest instance the page renders as a matrix.
pub const MAX_DEMO_SIZE: usize = 128;

#[derive(Serialize)]
struct ScheduleView {
    vertices: Vec<(f64, f64)>,
    total_time: f64,
    sweeps: usize,
    /// `(t, s)` samples for plotting.
    curve: Vec<(f64, f64)>,
}

pub fn pause_schedule_json(
    anneal_time: f64,
    pause_start: f64,
    duration: f64,
    sweeps_per_us: u32,
) -> Result<String, String> {
    let s = make_pause_schedule(anneal_time, pause_start, duration).map_err(|e| e.to_string())?;
    let total = s.total_time();
    let curve = (0..=200).map(|k| {
        let t = total * k as f64 / 200.0;
        (t, s.s_at(t))
    });
    let view = ScheduleView {
        vertices: s.vertices().to_vec(),
        total_time: total,
        sweeps: s.sweep_count(sweeps_per_us),
        curve: curve.collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct InstanceView {
    values: Vec<u64>,
    total: u64,
    /// Dense upper-triangular matrix, row-major.
    matrix: Vec<Vec<i64>>,
    offset: i64,
    histogram: Vec<(f64, usize)>,
}

pub fn instance_json(n: usize, max_value: u64, seed: u64) -> Result<String, String> {
    if n > MAX_DEMO_SIZE {
        return Err(format!("the demo renders at most {MAX_DEMO_SIZE} values"));
    }
    let inst = generate_perfect(n, max_value, seed).map_err(|e| e.to_string())?;
    let q = build_qubo(&inst).map_err(|e| e.to_string())?;
    let matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if j < i { 0 } else { q.get(i, j) })
                .collect()
        })
        .collect();
    let view = InstanceView {
        values: inst.values().to_vec(),
        total: inst.total(),
        matrix,
        offset: q.offset(),
        histogram: histogram(&inst, 10).map_err(|e| e.to_string())?,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SolveView {
    delta: u64,
    optimal_delta: Option<u64>,
    energy: i64,
    assignment: Vec<u8>,
    /// Energy after each round.
    trace: Vec<i64>,
    wall_time: f64,
}

pub fn solve_json(
    n: usize,
    max_value: u64,
    instance_seed: u64,
    backend: &str,
    subproblem_size: usize,
    seed: u64,
) -> Result<String, String> {
    if n > MAX_DEMO_SIZE {
        return Err(format!("the demo solves at most {MAX_DEMO_SIZE} values"));
    }
    let backend: Backend = backend.parse().map_err(|e: subqubo::Error| e.to_string())?;
    let inst = generate_perfect(n, max_value, instance_seed).map_err(|e| e.to_string())?;
    let q = build_qubo(&inst).map_err(|e| e.to_string())?;
    let mut params = HybridParams::new(subproblem_size, backend, seed);
    params.backend_params.reads = 4;
    let out = decompose_solve(&q, &params).map_err(|e| e.to_string())?;
    let view = SolveView {
        delta: delta(&inst, out.result.assignment.as_slice()).map_err(|e| e.to_string())?,
        optimal_delta: optimal_delta(&inst).ok(),
        energy: out.result.energy,
        assignment: out.result.assignment.as_slice().to_vec(),
        trace: out.rounds.iter().map(|r| r.energy_after).collect(),
        wall_time: out.result.wall_time,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn pause_schedule(
    anneal_time: f64,
    pause_start: f64,
    duration: f64,
    sweeps_per_us: u32,
) -> Result<String, JsError> {
    pause_schedule_json(anneal_time, pause_start, duration, sweeps_per_us)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn instance(n: usize, max_value: u64, seed: u64) -> Result<String, JsError> {
    instance_json(n, max_value, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(
    n: usize,
    max_value: u64,
    instance_seed: u64,
    backend: &str,
    subproblem_size: usize,
    seed: u64,
) -> Result<String, JsError> {
    solve_json(n, max_value, instance_seed, backend, subproblem_size, seed)
        .map_err(|e| JsError::new(&e))
}
