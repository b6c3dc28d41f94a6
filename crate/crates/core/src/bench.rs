//! Seeded benchmark harness: generate, build, solve, and report timings per
//! encoding, with per-run and aggregate CSV output.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bnb::{solve_milp, MilpConfig, MilpError, MilpStatus};
use crate::embed::{BigM, Encoding};
use crate::knapsack::{build_model, KnapsackError, KnapsackInstance, RNG_NAME};
use crate::relu_net::ReluNet;

/// Largest `n` the dense-tableau solver is run on without `allow_large`.
pub const DEFAULT_SIZE_CAP: usize = 100;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub encodings: Vec<Encoding>,
    pub milp: MilpConfig,
    pub big_m: BigM,
    pub workers: usize,
    /// Also time model construction.
    pub include_build: bool,
    pub size_cap: usize,
    pub allow_large: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_list: vec![10],
            seeds: (1..=30).collect(),
            encodings: vec![Encoding::ReluPlus, Encoding::Classic],
            milp: MilpConfig::default(),
            big_m: BigM::PerNode,
            workers: 1,
            include_build: false,
            size_cap: DEFAULT_SIZE_CAP,
            allow_large: false,
        }
    }
}

impl BenchConfig {
    /// Short hash of everything that affects solver behaviour.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.milp.describe().as_bytes());
        h.update(format!(";big_m={}", self.big_m).as_bytes());
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("n = {n} exceeds the dense-solver cap of {cap}; pass allow_large to run it anyway")]
    SizeCap { n: usize, cap: usize },
    #[error(transparent)]
    Knapsack(#[from] KnapsackError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub n: usize,
    pub seed: u64,
    pub encoding: String,
    pub status: String,
    /// Best incumbent; NaN when none was found.
    pub objective: f64,
    /// Proven bound on the optimum; differs from `objective` only on limit-hit rows.
    pub bound: f64,
    pub solve_ms: f64,
    /// Model construction time; empty unless requested.
    pub build_ms: Option<f64>,
    pub simplex_iterations: usize,
    pub bnb_nodes: usize,
    pub limit_reached: bool,
    pub workers: usize,
    pub config_hash: String,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAggregate {
    pub n: usize,
    pub encoding: String,
    /// Runs that reached optimality and enter the mean.
    pub runs: usize,
    pub limit_reached: usize,
    pub mean_solve_ms: f64,
    /// Population standard deviation (divides by `runs`).
    pub std_solve_ms_population: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub runs: Vec<BenchRun>,
    pub aggregates: Vec<BenchAggregate>,
}

/// Mean and population standard deviation, summed in slice order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups runs by `(n, encoding)` in first-appearance order. Runs flagged
/// `limit_reached` are counted but left out of the timing statistics.
pub fn aggregate(runs: &[BenchRun]) -> Vec<BenchAggregate> {
    let mut keys: Vec<(usize, String)> = Vec::new();
    for r in runs {
        let k = (r.n, r.encoding.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(n, encoding)| {
            let group: Vec<&BenchRun> = runs.iter().filter(|r| r.n == n && r.encoding == encoding).collect();
            let times: Vec<f64> = group.iter().filter(|r| !r.limit_reached).map(|r| r.solve_ms).collect();
            let (mean, std) = mean_std(&times);
            BenchAggregate {
                n,
                encoding,
                runs: times.len(),
                limit_reached: group.len() - times.len(),
                mean_solve_ms: mean,
                std_solve_ms_population: std,
            }
        })
        .collect()
}

/// Solves one `(n, seed, encoding)` cell.
pub fn bench_one(
    net: &ReluNet,
    n: usize,
    seed: u64,
    encoding: Encoding,
    cfg: &BenchConfig,
    hash: &str,
) -> Result<BenchRun, BenchError> {
    let inst = KnapsackInstance::generate(n, seed)?;
    let build_start = Instant::now();
    let km = build_model(&inst, net, encoding, cfg.big_m)?;
    let build_ms = build_start.elapsed().as_secs_f64() * 1e3;
    let solve_start = Instant::now();
    let outcome = solve_milp(&km.model, &cfg.milp);
    let solve_ms = solve_start.elapsed().as_secs_f64() * 1e3;
    let (status, r, limit_reached) = match outcome {
        Ok(r) => (format!("{:?}", r.status), r, false),
        Err(MilpError::LimitReached(r)) => ("LimitReached".to_string(), *r, true),
        Err(e) => return Err(e.into()),
    };
    debug_assert!(limit_reached || r.status != MilpStatus::Unbounded);
    Ok(BenchRun {
        n,
        seed,
        encoding: encoding.name().to_string(),
        status,
        objective: r.objective,
        bound: r.bound,
        solve_ms,
        build_ms: cfg.include_build.then_some(build_ms),
        simplex_iterations: r.simplex_iterations,
        bnb_nodes: r.nodes,
        limit_reached,
        workers: cfg.workers,
        config_hash: hash.to_string(),
        rng: RNG_NAME.to_string(),
    })
}

/// Runs every `(n, seed, encoding)` cell. Rows come back in
/// `n_list x seeds x encodings` order regardless of worker count.
pub fn run_bench(net: &ReluNet, cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if !cfg.allow_large {
        if let Some(&n) = cfg.n_list.iter().find(|&&n| n > cfg.size_cap) {
            return Err(BenchError::SizeCap { n, cap: cfg.size_cap });
        }
    }
    let hash = cfg.config_hash();
    let jobs: Vec<(usize, u64, Encoding)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| {
            cfg.seeds
                .iter()
                .flat_map(move |&s| cfg.encodings.iter().map(move |&e| (n, s, e)))
        })
        .collect();
    let results: Mutex<Vec<Option<Result<BenchRun, BenchError>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = Mutex::new(0usize);
    let workers = cfg.workers.max(1).min(jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = {
                    let mut g = next.lock().unwrap();
                    let k = *g;
                    *g += 1;
                    k
                };
                let Some(&(n, seed, enc)) = jobs.get(k) else {
                    break;
                };
                let r = bench_one(net, n, seed, enc, cfg, &hash);
                results.lock().unwrap()[k] = Some(r);
            });
        }
    });
    let runs = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregates = aggregate(&runs);
    Ok(BenchReport { runs, aggregates })
}

impl BenchReport {
    pub fn write_runs_csv<W: Write>(&self, w: W) -> Result<(), BenchError> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.runs {
            wtr.serialize(r)?;
        }
        if self.runs.is_empty() {
            wtr.write_record([
                "n",
                "seed",
                "encoding",
                "status",
                "objective",
                "bound",
                "solve_ms",
                "build_ms",
                "simplex_iterations",
                "bnb_nodes",
                "limit_reached",
                "workers",
                "config_hash",
                "rng",
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_aggregate_csv<W: Write>(&self, w: W) -> Result<(), BenchError> {
        let mut wtr = csv::Writer::from_writer(w);
        for a in &self.aggregates {
            wtr.serialize(a)?;
        }
        if self.aggregates.is_empty() {
            wtr.write_record([
                "n",
                "encoding",
                "runs",
                "limit_reached",
                "mean_solve_ms",
                "std_solve_ms_population",
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Parses rows written by [`BenchReport::write_runs_csv`].
    pub fn read_runs_csv(text: &str) -> Result<Vec<BenchRun>, BenchError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        rdr.deserialize().map(|r| r.map_err(BenchError::from)).collect()
    }
}
