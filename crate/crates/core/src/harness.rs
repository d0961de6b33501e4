//! Desk-scale experiments: size sweep, pause-duration sweep, runtime
//! scaling fit and boxplot summaries, all written as CSV tables.
//!
//! Every sweep cell derives its seed from the master seed and its own
//! coordinates, so tables do not depend on execution order. Cells run
//! sequentially to keep the recorded wall times comparable.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annealer::{make_pause_schedule, sa_solve, svmc_solve, AnnealParams};
use crate::hybrid::{decompose_solve, Backend, HybridParams};
use crate::instances::{delta, generate_perfect, optimal_delta, NppInstance};
use crate::model::{build_qubo, ising_from_qubo};
use crate::rng::derive_seed;
use crate::{Error, Result};

const INSTANCE_STREAM: u64 = 0;
const SOLVER_STREAM: u64 = 1;
const PAUSE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    pub datasets_per_size: usize,
    pub max_value: u64,
    /// Decomposition settings; the seed is replaced per cell.
    pub solver: HybridParams,
    pub repetitions: usize,
    /// Pause lengths in microseconds; a zero-length control arm is added.
    pub pause_durations: Vec<f64>,
    pub anneal_time: f64,
    pub pause_start: f64,
    pub pause_backend: Backend,
    /// Size and dataset index of the generated instance used by the pause
    /// sweep when no instance file is given.
    pub pause_size: usize,
    pub pause_dataset: usize,
    pub saturation: f64,
    pub master_seed: u64,
    /// Output directory for result tables.
    pub output_path: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sizes: vec![8, 16, 32, 64, 128, 256],
            datasets_per_size: 10,
            max_value: 100,
            solver: HybridParams::default(),
            repetitions: 5,
            pause_durations: vec![10.0, 40.0, 60.0, 100.0, 120.0],
            anneal_time: 20.0,
            pause_start: 10.0,
            pause_backend: Backend::Svmc,
            pause_size: 24,
            pause_dataset: 0,
            saturation: 50.0,
            master_seed: 0,
            output_path: "results".to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(s).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::invalid("sizes must not be empty"));
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n < 2) {
            return Err(Error::invalid(format!("problem size {n} is below 2")));
        }
        if self.datasets_per_size == 0 || self.repetitions == 0 {
            return Err(Error::invalid(
                "datasets_per_size and repetitions must be positive",
            ));
        }
        if self.max_value == 0 {
            return Err(Error::invalid("max_value must be positive"));
        }
        if self.saturation.is_nan() || self.saturation < 0.0 {
            return Err(Error::invalid("saturation must be nonnegative"));
        }
        if !matches!(self.pause_backend, Backend::Sa | Backend::Svmc) {
            return Err(Error::invalid("pause_backend must be `sa` or `svmc`"));
        }
        for &d in &self.pause_durations {
            make_pause_schedule(self.anneal_time, self.pause_start, d)?;
        }
        self.solver.validate()
    }

    /// Pause arms in table order: the control first, then the configured durations.
    pub fn pause_arms(&self) -> Vec<f64> {
        let mut arms = Vec::with_capacity(self.pause_durations.len() + 1);
        if !self.pause_durations.contains(&0.0) {
            arms.push(0.0);
        }
        arms.extend(&self.pause_durations);
        arms
    }
}

/// Seed of dataset `index` of size `size` under `master_seed`.
pub fn dataset_seed(master_seed: u64, size: usize, index: usize) -> u64 {
    derive_seed(master_seed, &[INSTANCE_STREAM, size as u64, index as u64])
}

/// The instances a size sweep solves, in table order.
pub fn generate_datasets(config: &ExperimentConfig) -> Result<Vec<(usize, usize, NppInstance)>> {
    let mut out = Vec::new();
    for &size in &config.sizes {
        for d in 0..config.datasets_per_size {
            let inst = generate_perfect(
                size,
                config.max_value,
                dataset_seed(config.master_seed, size, d),
            )?;
            out.push((size, d, inst));
        }
    }
    Ok(out)
}

/// The instance selected by `pause_size` / `pause_dataset`.
pub fn pause_instance(config: &ExperimentConfig) -> Result<NppInstance> {
    generate_perfect(
        config.pause_size,
        config.max_value,
        dataset_seed(config.master_seed, config.pause_size, config.pause_dataset),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub size: usize,
    pub dataset_index: usize,
    pub seed: u64,
    pub total: Option<u64>,
    pub optimal_delta: Option<u64>,
    pub delta: Option<u64>,
    pub saturated_delta: Option<f64>,
    pub energy: Option<i64>,
    pub rounds: Option<usize>,
    pub status: String,
    pub wall_time: f64,
}

/// Solve `datasets_per_size` perfect instances per size.
///
/// Instance and solver failures are recorded in the row's `status`.
pub fn run_size_sweep(config: &ExperimentConfig) -> Result<Vec<SizeRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &size in &config.sizes {
        for d in 0..config.datasets_per_size {
            let seed = dataset_seed(config.master_seed, size, d);
            let mut row = SizeRow {
                size,
                dataset_index: d,
                seed,
                total: None,
                optimal_delta: None,
                delta: None,
                saturated_delta: None,
                energy: None,
                rounds: None,
                status: "ok".to_string(),
                wall_time: 0.0,
            };
            if let Err(e) = solve_cell(config, size, d, seed, &mut row) {
                row.status = format!("error: {e}");
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

fn solve_cell(
    config: &ExperimentConfig,
    size: usize,
    d: usize,
    seed: u64,
    row: &mut SizeRow,
) -> Result<()> {
    let inst = generate_perfect(size, config.max_value, seed)?;
    row.total = Some(inst.total());
    row.optimal_delta = optimal_delta(&inst).ok();
    let q = build_qubo(&inst)?;
    let params = HybridParams {
        seed: derive_seed(config.master_seed, &[SOLVER_STREAM, size as u64, d as u64]),
        ..config.solver.clone()
    };
    let out = decompose_solve(&q, &params)?;
    let dl = delta(&inst, out.result.assignment.as_slice())?;
    row.delta = Some(dl);
    row.saturated_delta = Some((dl as f64).min(config.saturation));
    row.energy = Some(out.result.energy);
    row.rounds = Some(out.rounds.len());
    row.wall_time = out.result.wall_time;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauseRow {
    pub duration: f64,
    pub repetition: usize,
    pub seed: u64,
    pub sweeps: usize,
    pub delta: Option<u64>,
    pub saturated_delta: Option<f64>,
    pub energy: Option<f64>,
    pub status: String,
    pub wall_time: f64,
}

/// Anneal `instance` under `make_pause_schedule(anneal_time, pause_start, d)`
/// for every arm and repetition. Repetition `r` uses the same seed in every
/// arm, so arms differ only in their schedule.
pub fn run_pause_sweep(config: &ExperimentConfig, instance: &NppInstance) -> Result<Vec<PauseRow>> {
    config.validate()?;
    if config.pause_durations.is_empty() {
        return Err(Error::invalid("pause_durations must not be empty"));
    }
    let model = ising_from_qubo(&build_qubo(instance)?);
    let bp = &config.solver.backend_params;
    let mut rows = Vec::new();
    for duration in config.pause_arms() {
        let schedule = make_pause_schedule(config.anneal_time, config.pause_start, duration)?;
        for r in 0..config.repetitions {
            let seed = derive_seed(config.master_seed, &[PAUSE_STREAM, r as u64]);
            let auto = AnnealParams::for_model(&model, seed);
            let (beta_start, beta_end) = bp.beta_range.unwrap_or((auto.beta_start, auto.beta_end));
            let params = AnnealParams {
                sweeps_per_microsecond: bp.sweeps_per_microsecond,
                beta_start,
                beta_end,
                seed,
                reads: bp.reads,
            };
            let solved = match config.pause_backend {
                Backend::Sa => sa_solve(&model, &schedule, &params),
                _ => svmc_solve(&model, &schedule, &params),
            };
            let mut row = PauseRow {
                duration,
                repetition: r,
                seed,
                sweeps: schedule.sweep_count(params.sweeps_per_microsecond),
                delta: None,
                saturated_delta: None,
                energy: None,
                status: "ok".to_string(),
                wall_time: 0.0,
            };
            match solved.and_then(|res| Ok((delta(instance, res.assignment.as_slice())?, res))) {
                Ok((dl, res)) => {
                    row.delta = Some(dl);
                    row.saturated_delta = Some((dl as f64).min(config.saturation));
                    row.energy = Some(res.energy);
                    row.wall_time = res.wall_time;
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Parameters of `t = A·exp(x / B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    /// `ln t − ln t̂` per input point.
    pub residuals: Vec<f64>,
}

/// Least-squares fit of `ln t = ln A + x / B`.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "exponential fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, t)) = points
        .iter()
        .find(|&&(x, t)| t <= 0.0 || !x.is_finite() || !t.is_finite())
    {
        return Err(Error::invalid(format!(
            "point ({x}, {t}) needs finite x and t > 0"
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1.ln() - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::invalid("all x values are equal"));
    }
    let slope = sxy / sxx;
    let scale = (sxx / n).sqrt();
    if slope.abs() * scale < 1e-12 {
        return Err(Error::invalid(
            "zero slope: the growth constant B is unbounded",
        ));
    }
    let intercept = mean_y - slope * mean_x;
    let residuals = points
        .iter()
        .map(|&(x, t)| t.ln() - (intercept + slope * x))
        .collect();
    Ok(FitResult {
        a: intercept.exp(),
        b: 1.0 / slope,
        residuals,
    })
}

/// Median wall time per size over successful rows, sorted by size.
pub fn median_times(rows: &[SizeRow]) -> Vec<(f64, f64)> {
    let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status == "ok") {
        by_size.entry(r.size).or_default().push(r.wall_time);
    }
    by_size
        .into_iter()
        .map(|(size, times)| (size as f64, quantile(&sorted(times), 0.5)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Inputs capped at the saturation value, in input order.
    pub saturated_values: Vec<f64>,
    pub original_values: Vec<f64>,
}

/// Five-number summary after capping values at `saturation`.
/// Quartiles interpolate linearly between order statistics.
pub fn boxplot_stats(deltas: &[f64], saturation: f64) -> Result<BoxplotSummary> {
    if deltas.is_empty() {
        return Err(Error::invalid("boxplot of an empty list"));
    }
    let saturated: Vec<f64> = deltas.iter().map(|&d| d.min(saturation)).collect();
    let s = sorted(saturated.clone());
    Ok(BoxplotSummary {
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
        saturated_values: saturated,
        original_values: deltas.to_vec(),
    })
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One line of a boxplot table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub group: f64,
    pub count: usize,
    pub zero_count: usize,
    pub saturated_count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Boxplot per group over `(group, delta)` pairs.
pub fn boxplot_table(
    values: impl IntoIterator<Item = (f64, u64)>,
    saturation: f64,
) -> Result<Vec<BoxRow>> {
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for (g, d) in values {
        match groups.iter_mut().find(|(k, _)| *k == g) {
            Some((_, v)) => v.push(d as f64),
            None => groups.push((g, vec![d as f64])),
        }
    }
    groups
        .into_iter()
        .map(|(group, deltas)| {
            let s = boxplot_stats(&deltas, saturation)?;
            Ok(BoxRow {
                group,
                count: deltas.len(),
                zero_count: deltas.iter().filter(|&&d| d == 0.0).count(),
                saturated_count: deltas.iter().filter(|&&d| d > saturation).count(),
                min: s.min,
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                max: s.max,
            })
        })
        .collect()
}

/// Serialize `rows` as CSV with a header row.
pub fn write_csv<S: Serialize, W: Write>(rows: &[S], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<S: Serialize>(rows: &[S], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_csv(rows, fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn approx(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn fit_recovers_synthetic_parameters() {
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|k| (100.0 * k as f64, 2.0 * (100.0 * k as f64 / 340.0).exp()))
            .collect();
        let f = fit_exponential(&pts).unwrap();
        assert!(approx(f.a, 2.0, 0.01));
        assert!(approx(f.b, 340.0, 0.01));
        assert!(f.residuals.iter().all(|r| r.abs() <= 1e-9));
    }

    #[test]
    fn fit_tolerates_lognormal_noise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|k| {
                let x = 100.0 * k as f64;
                // Box-Muller draw, sigma 0.05
                let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
                let z = (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                (x, 2.0 * (x / 340.0).exp() * (0.05 * z).exp())
            })
            .collect();
        let f = fit_exponential(&pts).unwrap();
        assert!(approx(f.a, 2.0, 0.1), "A = {}", f.a);
        assert!(approx(f.b, 340.0, 0.1), "B = {}", f.b);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_exponential(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_exponential(&[(1.0, 1.0), (2.0, 0.0), (3.0, 2.0)]).is_err());
        assert!(fit_exponential(&[(1.0, 3.0), (2.0, 3.0), (5.0, 3.0)]).is_err());
        assert!(fit_exponential(&[(1.0, 3.0), (1.0, 4.0), (1.0, 5.0)]).is_err());
    }

    #[test]
    fn boxplot_examples() {
        let s = boxplot_stats(&[0.0, 0.0, 120.0], 50.0).unwrap();
        assert_eq!(s.saturated_values, vec![0.0, 0.0, 50.0]);
        assert_eq!(s.original_values, vec![0.0, 0.0, 120.0]);
        assert_eq!(s.median, 0.0);
        assert_eq!(s.max, 50.0);

        let s = boxplot_stats(&[7.0], 50.0).unwrap();
        assert_eq!([s.min, s.q1, s.median, s.q3, s.max], [7.0; 5]);

        let s = boxplot_stats(&[5.0, 1.0, 3.0, 2.0, 4.0], 50.0).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));

        assert!(boxplot_stats(&[], 50.0).is_err());
    }

    #[test]
    fn saturation_is_idempotent() {
        let raw = [0.0, 4.0, 75.0, 200.0, 12.0, 51.0];
        let once = boxplot_stats(&raw, 50.0).unwrap();
        let twice = boxplot_stats(&once.saturated_values, 50.0).unwrap();
        assert_eq!(
            (once.min, once.q1, once.median, once.q3, once.max),
            (twice.min, twice.q1, twice.median, twice.q3, twice.max)
        );
    }

    #[test]
    fn trivial_size_sweep() {
        let cfg = ExperimentConfig {
            sizes: vec![2],
            datasets_per_size: 1,
            ..ExperimentConfig::default()
        };
        let rows = run_size_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].delta, Some(0));
        assert_eq!(rows[0].status, "ok");
    }

    #[test]
    fn failing_cells_are_recorded() {
        let cfg = ExperimentConfig {
            sizes: vec![4, 6],
            datasets_per_size: 2,
            max_value: 1_000_000_000,
            ..ExperimentConfig::default()
        };
        let rows = run_size_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.status.starts_with("error")));
    }

    #[test]
    fn control_only_pause_sweep() {
        let cfg = ExperimentConfig {
            pause_durations: vec![0.0],
            repetitions: 1,
            ..ExperimentConfig::default()
        };
        let inst = generate_perfect(8, 20, 1).unwrap();
        let rows = run_pause_sweep(&cfg, &inst).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].duration, 0.0);
        assert_eq!(rows[0].sweeps, 2000);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = ExperimentConfig {
            sizes: vec![],
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            pause_start: 30.0,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            pause_backend: Backend::Tabu,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"sizes":[8],"bogus":1}"#).is_err());
        let cfg =
            ExperimentConfig::from_json(r#"{"sizes":[8,16],"solver":{"backend":"sa"}}"#).unwrap();
        assert_eq!(cfg.solver.backend, Backend::Sa);
        assert_eq!(cfg.datasets_per_size, 10);
    }

    #[test]
    fn csv_has_header_and_empty_options() {
        let rows = vec![PauseRow {
            duration: 10.0,
            repetition: 0,
            seed: 1,
            sweeps: 3000,
            delta: None,
            saturated_delta: None,
            energy: None,
            status: "error: x".into(),
            wall_time: 0.0,
        }];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "duration,repetition,seed,sweeps,delta,saturated_delta,energy,status,wall_time\n10.0,0,1,3000,,,,error: x,0.0\n"
        );
    }
}
