//! `subqubo` command-line tool.
//!
//! Every subcommand reads an optional JSON experiment config and applies
//! flag overrides on top. Tables are written as CSV with a header row.
//! Exit codes: 0 success, 2 invalid config or input, 3 solver resource error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use subqubo::annealer::Schedule;
use subqubo::chimera::{
    chimera_graph, clique_capacity, clique_embedding, complete_edges, validate_embedding, Embedding,
};
use subqubo::harness::{
    boxplot_table, fit_exponential, generate_datasets, median_times, pause_instance,
    run_pause_sweep, run_size_sweep, write_csv_file, ExperimentConfig,
};
use subqubo::hybrid::{decompose_solve, write_round_trace};
use subqubo::instances::{delta, histogram, NppInstance};
use subqubo::model::{build_qubo, QuboFile, QuboMatrix, Weight};
use subqubo::Error;

#[derive(Parser)]
#[command(
    name = "subqubo",
    version,
    about = "Subqubo decomposition solver for number partitioning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (solver seed for `solve`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    subproblem_size: Option<usize>,
    /// Anneal schedule as a JSON list of `[t, s]` pairs.
    #[arg(long)]
    schedule_file: Option<PathBuf>,
    #[arg(long)]
    max_rounds: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write perfect instances, their QUBOs and value histograms.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        datasets: Option<usize>,
        #[arg(long)]
        max_value: Option<u64>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Solve one instance or QUBO file.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
        /// Instance JSON (`values`, `seed`, `size_class`).
        #[arg(long, conflicts_with = "qubo")]
        instance: Option<PathBuf>,
        /// QUBO JSON (`n`, `entries`, `offset`).
        #[arg(long)]
        qubo: Option<PathBuf>,
        /// Write the round trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Solve generated datasets for every size.
    SizeSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        datasets: Option<usize>,
    },
    /// Anneal one instance under pause schedules of several lengths.
    PauseSweep {
        #[command(flatten)]
        common: Common,
        /// Instance JSON; a generated instance is used when absent.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        durations: Option<Vec<f64>>,
        #[arg(long)]
        repetitions: Option<usize>,
        /// `sa` or `svmc`.
        #[arg(long)]
        backend: Option<String>,
    },
    /// Fit `t = A exp(x / B)` to a CSV of `x,t` or to a size-sweep table.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Build or validate a clique embedding on a Chimera graph.
    Embed {
        #[command(flatten)]
        common: Common,
        /// Chimera size.
        #[arg(long)]
        m: Option<usize>,
        /// Logical variables; the clique capacity when absent.
        #[arg(long)]
        n: Option<usize>,
        /// Validate this embedding instead of building one.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("invalid config: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_resource() {
                3
            } else if matches!(e, Error::Io(_)) {
                1
            } else {
                2
            })
        }
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_config(common: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => serde_json::from_str(&read_input(p)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &common.output {
        cfg.output_path = o.display().to_string();
    }
    Ok(cfg)
}

fn check(cfg: &ExperimentConfig) -> CliResult<()> {
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))
}

fn apply_solver(cfg: &mut ExperimentConfig, flags: &SolverFlags) -> CliResult<()> {
    if let Some(b) = &flags.backend {
        cfg.solver.backend = b
            .parse()
            .map_err(|e: Error| CliError::Config(e.to_string()))?;
    }
    if let Some(k) = flags.subproblem_size {
        cfg.solver.subproblem_size = k;
    }
    if let Some(r) = flags.max_rounds {
        cfg.solver.max_rounds = r;
        cfg.solver.stall_rounds = cfg.solver.stall_rounds.min(r);
    }
    if let Some(p) = &flags.schedule_file {
        cfg.solver.backend_params.schedule =
            Schedule::from_json(&read_input(p)?).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from(&cfg.output_path)
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Generate {
            common,
            sizes,
            datasets,
            max_value,
            bins,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(s) = sizes {
                cfg.sizes = s;
            }
            if let Some(d) = datasets {
                cfg.datasets_per_size = d;
            }
            if let Some(v) = max_value {
                cfg.max_value = v;
            }
            check(&cfg)?;
            generate(&cfg, bins)
        }
        Command::Solve {
            common,
            solver,
            instance,
            qubo,
            trace,
        } => {
            let mut cfg = load_config(&common)?;
            apply_solver(&mut cfg, &solver)?;
            if let Some(s) = common.seed {
                cfg.solver.seed = s;
            }
            check(&cfg)?;
            solve(&cfg, instance.as_deref(), qubo.as_deref(), trace.as_deref())
        }
        Command::SizeSweep {
            common,
            solver,
            sizes,
            datasets,
        } => {
            let mut cfg = load_config(&common)?;
            apply_solver(&mut cfg, &solver)?;
            if let Some(s) = sizes {
                cfg.sizes = s;
            }
            if let Some(d) = datasets {
                cfg.datasets_per_size = d;
            }
            check(&cfg)?;
            size_sweep(&cfg)
        }
        Command::PauseSweep {
            common,
            instance,
            durations,
            repetitions,
            backend,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(d) = durations {
                cfg.pause_durations = d;
            }
            if let Some(r) = repetitions {
                cfg.repetitions = r;
            }
            if let Some(b) = backend {
                cfg.pause_backend = b
                    .parse()
                    .map_err(|e: Error| CliError::Config(e.to_string()))?;
            }
            check(&cfg)?;
            if cfg.pause_durations.is_empty() {
                return Err(CliError::Config("pause_durations must not be empty".into()));
            }
            let inst = match instance {
                Some(p) => NppInstance::from_json(&read_input(&p)?)
                    .map_err(|e| CliError::Config(e.to_string()))?,
                None => pause_instance(&cfg)?,
            };
            pause_sweep(&cfg, &inst)
        }
        Command::Fit { common, input } => {
            let cfg = load_config(&common)?;
            check(&cfg)?;
            fit(&cfg, &input)
        }
        Command::Embed {
            common,
            m,
            n,
            embedding,
        } => {
            let cfg = load_config(&common)?;
            check(&cfg)?;
            let m = m.or(cfg.solver.backend_params.chimera_m).unwrap_or(2);
            embed(&cfg, m, n, embedding.as_deref())
        }
    }
}

#[derive(Serialize)]
struct InstanceRow {
    size: usize,
    dataset_index: usize,
    seed: u64,
    total: u64,
    instance_file: String,
    qubo_file: String,
}

#[derive(Serialize)]
struct HistogramRow {
    size: usize,
    dataset_index: usize,
    bin_start: f64,
    count: usize,
}

fn generate(cfg: &ExperimentConfig, bins: usize) -> CliResult<()> {
    let dir = out_dir(cfg);
    fs::create_dir_all(&dir).map_err(Error::from)?;
    let mut index = Vec::new();
    let mut hist = Vec::new();
    for (size, d, inst) in generate_datasets(cfg)? {
        let stem = format!("instance_n{size}_d{d}");
        let inst_file = format!("{stem}.json");
        let qubo_file = format!("{stem}_qubo.json");
        fs::write(dir.join(&inst_file), inst.to_json()?).map_err(Error::from)?;
        let q = build_qubo(&inst)?;
        fs::write(dir.join(&qubo_file), q.to_json()?).map_err(Error::from)?;
        for (bin_start, count) in histogram(&inst, bins)? {
            hist.push(HistogramRow {
                size,
                dataset_index: d,
                bin_start,
                count,
            });
        }
        index.push(InstanceRow {
            size,
            dataset_index: d,
            seed: inst.seed(),
            total: inst.total(),
            instance_file: inst_file,
            qubo_file,
        });
    }
    write_csv_file(&index, &dir.join("instances.csv"))?;
    write_csv_file(&hist, &dir.join("histograms.csv"))?;
    Ok(())
}

#[derive(Serialize)]
struct SolveRow {
    n: usize,
    backend: String,
    seed: u64,
    energy: f64,
    delta: Option<u64>,
    rounds: usize,
    evaluations: u64,
    chain_break_fraction: Option<f64>,
    assignment: String,
    wall_time: f64,
}

fn solve(
    cfg: &ExperimentConfig,
    instance: Option<&Path>,
    qubo: Option<&Path>,
    trace: Option<&Path>,
) -> CliResult<()> {
    let params = &cfg.solver;
    let bad = |e: Error| CliError::Config(e.to_string());
    let row = match (instance, qubo) {
        (Some(p), _) => {
            let inst = NppInstance::from_json(&read_input(p)?).map_err(bad)?;
            let q = build_qubo(&inst)?;
            let out = decompose_solve(&q, params)?;
            let dl = delta(&inst, out.result.assignment.as_slice())?;
            write_trace(trace, &out.rounds)?;
            solve_row(cfg, &q, &out, Some(dl))
        }
        (None, Some(p)) => {
            let file: QuboFile<f64> = serde_json::from_str(&read_input(p)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let q = QuboMatrix::from_entries(file.n, file.entries, file.offset).map_err(bad)?;
            let out = decompose_solve(&q, params)?;
            write_trace(trace, &out.rounds)?;
            solve_row(cfg, &q, &out, None)
        }
        (None, None) => return Err(CliError::Config("solve needs --instance or --qubo".into())),
    };
    write_csv_file(&[row], &out_dir(cfg).join("solve.csv"))?;
    Ok(())
}

fn solve_row<T: Weight>(
    cfg: &ExperimentConfig,
    q: &QuboMatrix<T>,
    out: &subqubo::hybrid::HybridOutcome<T>,
    delta: Option<u64>,
) -> SolveRow {
    let r = &out.result;
    SolveRow {
        n: q.n(),
        backend: cfg.solver.backend.to_string(),
        seed: cfg.solver.seed,
        energy: r.energy.to_f64(),
        delta,
        rounds: out.rounds.len(),
        evaluations: r.evaluations,
        chain_break_fraction: r.chain_break_fraction,
        assignment: r
            .assignment
            .as_slice()
            .iter()
            .map(|b| char::from(b'0' + b))
            .collect(),
        wall_time: r.wall_time,
    }
}

fn write_trace<T: Weight>(
    path: Option<&Path>,
    rounds: &[subqubo::hybrid::RoundRecord<T>],
) -> CliResult<()> {
    if let Some(p) = path {
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(Error::from)?;
        }
        let f = fs::File::create(p).map_err(Error::from)?;
        write_round_trace(rounds, std::io::BufWriter::new(f))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TimeRow {
    size: f64,
    median_wall_time: f64,
}

fn size_sweep(cfg: &ExperimentConfig) -> CliResult<()> {
    let rows = run_size_sweep(cfg)?;
    let dir = out_dir(cfg);
    write_csv_file(&rows, &dir.join("size_sweep.csv"))?;
    let ok = rows.iter().filter_map(|r| Some((r.size as f64, r.delta?)));
    write_csv_file(
        &boxplot_table(ok, cfg.saturation).unwrap_or_default(),
        &dir.join("size_boxplot.csv"),
    )?;
    let times: Vec<TimeRow> = median_times(&rows)
        .into_iter()
        .map(|(size, median_wall_time)| TimeRow {
            size,
            median_wall_time,
        })
        .collect();
    write_csv_file(&times, &dir.join("size_times.csv"))?;
    Ok(())
}

fn pause_sweep(cfg: &ExperimentConfig, inst: &NppInstance) -> CliResult<()> {
    let rows = run_pause_sweep(cfg, inst)?;
    let dir = out_dir(cfg);
    write_csv_file(&rows, &dir.join("pause_sweep.csv"))?;
    let ok = rows.iter().filter_map(|r| Some((r.duration, r.delta?)));
    write_csv_file(
        &boxplot_table(ok, cfg.saturation).unwrap_or_default(),
        &dir.join("pause_boxplot.csv"),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct FitRow {
    a: f64,
    b: f64,
    points: usize,
}

#[derive(Serialize)]
struct ResidualRow {
    x: f64,
    t: f64,
    residual: f64,
}

/// Reads `x,t` columns, or `size,wall_time` (reduced to per-size medians).
fn fit_points(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let text = read_input(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Config(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let bad = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    let (xi, ti, sweep) = match (col("x"), col("t"), col("size"), col("wall_time")) {
        (Some(x), Some(t), _, _) => (x, t, false),
        (_, _, Some(x), Some(t)) => (x, t, true),
        _ => return Err(bad("expected columns `x,t` or `size,wall_time`".into())),
    };
    let status = col("status");
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if status.is_some_and(|s| &rec[s] != "ok") {
            continue;
        }
        let parse = |i: usize| {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("`{}`: {e}", &rec[i])))
        };
        pts.push((parse(xi)?, parse(ti)?));
    }
    if sweep {
        let mut by_size: Vec<(f64, Vec<f64>)> = Vec::new();
        for (x, t) in pts {
            match by_size.iter_mut().find(|(k, _)| *k == x) {
                Some((_, v)) => v.push(t),
                None => by_size.push((x, vec![t])),
            }
        }
        pts = by_size
            .into_iter()
            .map(|(x, mut ts)| {
                ts.sort_by(f64::total_cmp);
                let mid = ts.len() / 2;
                let med = if ts.len() % 2 == 1 {
                    ts[mid]
                } else {
                    0.5 * (ts[mid - 1] + ts[mid])
                };
                (x, med)
            })
            .collect();
    }
    Ok(pts)
}

fn fit(cfg: &ExperimentConfig, input: &Path) -> CliResult<()> {
    let pts = fit_points(input)?;
    let f = fit_exponential(&pts).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = out_dir(cfg);
    write_csv_file(
        &[FitRow {
            a: f.a,
            b: f.b,
            points: pts.len(),
        }],
        &dir.join("fit.csv"),
    )?;
    let res: Vec<ResidualRow> = pts
        .iter()
        .zip(&f.residuals)
        .map(|(&(x, t), &residual)| ResidualRow { x, t, residual })
        .collect();
    write_csv_file(&res, &dir.join("fit_residuals.csv"))?;
    Ok(())
}

#[derive(Serialize)]
struct ChainRow {
    variable: usize,
    chain_length: usize,
    qubits: String,
}

#[derive(Serialize)]
struct ReportRow {
    check: &'static str,
    passed: bool,
    detail: String,
}

fn embed(
    cfg: &ExperimentConfig,
    m: usize,
    n: Option<usize>,
    existing: Option<&Path>,
) -> CliResult<()> {
    let bad = |e: Error| CliError::Config(e.to_string());
    let target = chimera_graph(m).map_err(bad)?;
    let emb = match existing {
        Some(p) => Embedding::from_json(&read_input(p)?).map_err(bad)?,
        None => clique_embedding(n.unwrap_or_else(|| clique_capacity(m)), &target)?,
    };
    let n = n.unwrap_or(emb.len());
    let report = validate_embedding(&emb, &complete_edges(n), &target);
    let dir = out_dir(cfg);
    fs::create_dir_all(&dir).map_err(Error::from)?;
    fs::write(dir.join("chimera_edges.csv"), target.edge_csv()).map_err(Error::from)?;
    if existing.is_none() {
        fs::write(dir.join("embedding.json"), emb.to_json()?).map_err(Error::from)?;
    }
    let chains: Vec<ChainRow> = emb
        .chains
        .iter()
        .enumerate()
        .map(|(variable, c)| ChainRow {
            variable,
            chain_length: c.len(),
            qubits: c
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect();
    write_csv_file(&chains, &dir.join("chains.csv"))?;
    let details = |pred: fn(&subqubo::chimera::Violation) -> bool| {
        report
            .violations
            .iter()
            .filter(|v| pred(v))
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    };
    use subqubo::chimera::Violation as V;
    let rows = vec![
        ReportRow {
            check: "chains_in_target",
            passed: !report
                .violations
                .iter()
                .any(|v| matches!(v, V::EmptyChain { .. } | V::UnknownQubit { .. })),
            detail: details(|v| matches!(v, V::EmptyChain { .. } | V::UnknownQubit { .. })),
        },
        ReportRow {
            check: "disjoint",
            passed: report.disjoint(),
            detail: details(|v| matches!(v, V::SharedQubit { .. })),
        },
        ReportRow {
            check: "connected",
            passed: report.connected(),
            detail: details(|v| matches!(v, V::DisconnectedChain { .. })),
        },
        ReportRow {
            check: "covers_edges",
            passed: report.covers_edges(),
            detail: details(|v| matches!(v, V::MissingChain { .. } | V::MissingCoupling { .. })),
        },
    ];
    write_csv_file(&rows, &dir.join("embedding_report.csv"))?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "embedding fails validation: {}",
            rows.iter()
                .filter(|r| !r.passed)
                .map(|r| r.check)
                .collect::<Vec<_>>()
                .join(", ")
        )))
    }
}
