use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nnembed::bench::{run_bench, BenchConfig, BenchReport};
use nnembed::embed::embedding_size;
use nnembed::knapsack::build_model;
use nnembed::relu_net::ReluNet;
use nnembed::verify::verify_net;
use nnembed::*;
use serde_json::json;

const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nnembed",
    version,
    about = "Embed ReLU networks into MILPs and benchmark the encodings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check both encodings against the forward pass over an input grid.
    Verify(VerifyArgs),
    /// Export a knapsack model in LP format and print its size.
    Encode(ModelArgs),
    /// Solve one knapsack model and print the solution as JSON.
    Solve(ModelArgs),
    /// Time both encodings over seeded instances and write CSV reports.
    Bench(BenchArgs),
}

/// Network files; the built-in square-approximating fixture is used when none are given.
#[derive(Args)]
struct NetArgs {
    /// Weight table, CSV with header `j_hat,i,j,w`.
    #[arg(long, requires_all = ["bias", "layers"])]
    net: Option<PathBuf>,
    /// Bias table, CSV with header `i,j,b`.
    #[arg(long, requires_all = ["net", "layers"])]
    bias: Option<PathBuf>,
    /// Layer sizes, JSON (`{"layer_sizes": [...]}` or a plain list).
    #[arg(long, requires_all = ["net", "bias"])]
    layers: Option<PathBuf>,
}

impl NetArgs {
    fn load(&self) -> Result<ReluNet> {
        match (&self.net, &self.bias, &self.layers) {
            (Some(w), Some(b), Some(l)) => Ok(ReluNet::load(w, b, l)?),
            _ => Ok(square_fixture()),
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Integer input grid `A..B` (inclusive); `A > B` gives an empty grid.
    #[arg(long, default_value = "0..10")]
    grid: String,
    #[arg(long, default_value = "pernode")]
    big_m: BigM,
    /// Write the full JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Instance JSON; otherwise one is generated from `--n` and `--seed`.
    #[arg(long, conflicts_with_all = ["n", "seed"])]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "reluplus")]
    encoding: Encoding,
    #[arg(long, default_value = "pernode")]
    big_m: BigM,
    /// Solver time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Output file (LP for `encode`, JSON for `solve`); stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Comma-separated class counts.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    /// Seed count `K` (seeds 1..=K) or an inclusive range `A..B`.
    #[arg(long, default_value = "30")]
    seeds: String,
    /// Comma-separated encodings; both by default.
    #[arg(long, value_delimiter = ',', default_value = "reluplus,classic")]
    encoding: Vec<Encoding>,
    #[arg(long, default_value = "pernode")]
    big_m: BigM,
    /// Per-solve time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also record model construction time.
    #[arg(long)]
    include_build: bool,
    /// Permit n above the dense-solver cap.
    #[arg(long)]
    allow_large: bool,
    /// Directory for `runs.csv` and `aggregate.csv`; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Exit(u8, anyhow::Error);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(a) => cmd_verify(&a),
        Command::Encode(a) => cmd_encode(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn input<T>(r: Result<T>) -> Result<T, Exit> {
    r.map_err(|e| Exit(EXIT_INPUT, e))
}

fn parse_range(text: &str) -> Result<(i64, i64)> {
    let (a, b) = text
        .split_once("..")
        .with_context(|| format!("expected A..B, got {text:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if text.contains("..") {
        let (a, b) = parse_range(text)?;
        if a < 0 {
            bail!("seeds must be non-negative");
        }
        return Ok((a as u64..=b.max(a - 1) as u64).collect());
    }
    let k: u64 = text.parse().with_context(|| format!("bad seed count {text:?}"))?;
    Ok((1..=k).collect())
}

fn time_limit(secs: Option<f64>) -> Result<Option<Duration>> {
    secs.map(|s| Duration::try_from_secs_f64(s).with_context(|| format!("bad time limit {s}")))
        .transpose()
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8, Exit> {
    let net = input(a.net.load())?;
    let (lo, hi) = input(parse_range(&a.grid))?;
    let grid: Vec<f64> = (lo..=hi).map(|x| x as f64).collect();
    let report = verify_net(&net, &grid, a.big_m);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(v) = &report.relu_plus_rejected {
        eprintln!("NegativeWeightRejected: {}", v.join(", "));
    }
    for c in report.failures() {
        eprintln!(
            "FAIL {:?} x={} expected={} got={} status={}",
            c.check, c.x, c.expected, c.theta, c.status
        );
    }
    println!(
        "{} cases, {} failed: {}",
        report.cases.len(),
        report.failures().count(),
        if report.passed { "PASS" } else { "FAIL" }
    );
    if let Some(out) = &a.out {
        let text = serde_json::to_string_pretty(&report).expect("report serialises");
        input(write_out(Some(out), &text))?;
    }
    Ok(if report.passed { 0 } else { EXIT_VERIFY })
}

fn load_instance(a: &ModelArgs) -> Result<KnapsackInstance> {
    Ok(match &a.instance {
        Some(p) => KnapsackInstance::load(p)?,
        None => KnapsackInstance::generate(a.n, a.seed)?,
    })
}

fn cmd_encode(a: &ModelArgs) -> Result<u8, Exit> {
    let net = input(a.net.load())?;
    let inst = input(load_instance(a))?;
    let km = input(build_model(&inst, &net, a.encoding, a.big_m).map_err(Into::into))?;
    input(write_out(a.out.as_deref(), &km.model.to_lp()))?;
    let st = km.model.stats();
    let per = embedding_size(net.layer_sizes(), a.encoding);
    // copy limits live in the Bounds section, one per class
    let summary = format!(
        "encoding={} n={} variables={} integer={} continuous={} binary={} constraints={} copy_limit_bounds={} total_constraints={} per_class: continuous={} binary={} constraints={}",
        a.encoding.name(),
        inst.n,
        st.variables(),
        st.integer,
        st.continuous,
        st.binary,
        st.constraints,
        inst.n,
        st.constraints + inst.n,
        per.continuous,
        per.binary,
        per.constraints
    );
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(0)
}

fn cmd_solve(a: &ModelArgs) -> Result<u8, Exit> {
    let net = input(a.net.load())?;
    let inst = input(load_instance(a))?;
    let km = input(build_model(&inst, &net, a.encoding, a.big_m).map_err(Into::into))?;
    let config = MilpConfig {
        time_limit: input(time_limit(a.time_limit))?,
        ..Default::default()
    };
    let start = Instant::now();
    let (status, r, code) = match solve_milp(&km.model, &config) {
        Ok(r) => (format!("{:?}", r.status), r, 0),
        Err(MilpError::LimitReached(r)) => ("LimitReached".to_string(), *r, EXIT_LIMIT),
        Err(e) => return Err(Exit(EXIT_LIMIT, e.into())),
    };
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;
    let has_x = !r.x.is_empty();
    let pick = |vars: &[VarId]| -> Option<Vec<f64>> { has_x.then(|| vars.iter().map(|v| r.x[v.0]).collect()) };
    let x: Option<Vec<i64>> = pick(&km.x).map(|v| v.iter().map(|x| x.round() as i64).collect());
    let doc = json!({
        "status": status,
        "encoding": a.encoding.name(),
        "big_m": a.big_m.to_string(),
        "n": inst.n,
        "seed": inst.seed,
        "X": x,
        "theta": pick(&km.theta()),
        "objective": r.objective,
        "bound": r.bound,
        "gap": r.gap,
        "true_objective": x.as_ref().map(|x| inst.true_objective(x)),
        "stats": {
            "solve_ms": solve_ms,
            "bnb_nodes": r.nodes,
            "lp_solves": r.lp_solves,
            "simplex_iterations": r.simplex_iterations,
            "cold_restarts": r.cold_restarts,
            "config": config.describe(),
        }
    });
    let text = serde_json::to_string_pretty(&doc).expect("json serialises") + "\n";
    input(write_out(a.out.as_deref(), &text))?;
    Ok(code)
}

fn cmd_bench(a: &BenchArgs) -> Result<u8, Exit> {
    let net = input(a.net.load())?;
    let cfg = BenchConfig {
        n_list: a.n.clone(),
        seeds: input(parse_seeds(&a.seeds))?,
        encodings: a.encoding.clone(),
        milp: MilpConfig {
            time_limit: input(time_limit(a.time_limit))?,
            ..Default::default()
        },
        big_m: a.big_m,
        workers: a.workers,
        include_build: a.include_build,
        allow_large: a.allow_large,
        ..Default::default()
    };
    let report = run_bench(&net, &cfg).map_err(|e| match e {
        nnembed::bench::BenchError::SizeCap { .. } | nnembed::bench::BenchError::Knapsack(_) => {
            Exit(EXIT_INPUT, e.into())
        }
        other => Exit(EXIT_LIMIT, other.into()),
    })?;
    input(write_reports(&report, a.out.as_deref()))?;
    let limits = report.runs.iter().filter(|r| r.limit_reached).count();
    for g in &report.aggregates {
        eprintln!(
            "n={} {}: {} optimal, {} limit, mean {:.3} ms, sd {:.3} ms",
            g.n, g.encoding, g.runs, g.limit_reached, g.mean_solve_ms, g.std_solve_ms_population
        );
    }
    Ok(if limits > 0 { EXIT_LIMIT } else { 0 })
}

fn write_reports(report: &BenchReport, out: Option<&Path>) -> Result<()> {
    let mut runs = Vec::new();
    report.write_runs_csv(&mut runs)?;
    let mut agg = Vec::new();
    report.write_aggregate_csv(&mut agg)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join("runs.csv"), runs)?;
            fs::write(dir.join("aggregate.csv"), agg)?;
        }
        None => {
            let mut stdout = std::io::stdout();
            stdout.write_all(&runs)?;
            stdout.write_all(b"\n")?;
            stdout.write_all(&agg)?;
        }
    }
    Ok(())
}
