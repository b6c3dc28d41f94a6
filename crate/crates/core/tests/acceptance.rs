//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero on any failure not listed in `KNOWN_RED`.

use std::time::{Duration, Instant};

use nnembed::bench::{run_bench, BenchConfig, BenchRun};
use nnembed::embed::{embedding_size, encode};
use nnembed::knapsack::{build_model, oracle_nn, oracle_true, oracle_with, DEFAULT_ENUM_BUDGET};
use nnembed::model::{LinModel, Relation, Sense, VarKind};
use nnembed::relu_net::ReluNet;
use nnembed::verify::{verify_net, Check, EXACTNESS_TOL};
use nnembed::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that are expected to fail with the in-house solver; see the
/// README section "Known limitations".
const KNOWN_RED: &[&str] = &["5b"];

const OBJ_TOL: f64 = 1e-5;
const LP_FEAS_TOL: f64 = 1e-7;
const MILP_TOL: f64 = 1e-6;
const F0_HAND: f64 = 0.1433;
const F0_TOL: f64 = 0.01;
/// Measured max |f(x) - x^2| over x in {0..10}; regression pin.
const PINNED_SQUARE_ERR: f64 = 0.332;
/// Per-solve time limit for the n = 100 runs.
const N100_TIME_LIMIT: Duration = Duration::from_secs(2);

struct Outcome {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn main() {
    let start = Instant::now();
    let net = square_fixture();
    let mut out = Vec::new();
    let mut record = |id: &'static str, passed: bool, detail: String| {
        println!("{} criterion {id}: {detail}", if passed { "PASS" } else { "FAIL" });
        out.push(Outcome { id, passed, detail });
    };

    let (p, d) = exactness(&net);
    record("1", p, d);
    let (p, d) = relu_plus_unbounded(&net);
    record("2", p, d);
    let (p, d) = oracle_equivalence(&net);
    record("3", p, d);
    let (p, d) = encoding_sizes(&net);
    record("4", p, d);
    let (p, d) = ordering(&net, 10, None);
    record("5a", p, d);
    let (p, d) = ordering(&net, 100, Some(N100_TIME_LIMIT));
    record("5b", p, d);
    let (p, d) = fixture_fidelity(&net);
    record("6", p, d);
    let (p, d) = random_lps();
    record("7a", p, d);
    let (p, d) = random_milps();
    record("7b", p, d);
    let (p, d) = big_m_dominance(&net);
    record("8a", p, d);
    let (p, d) = big_m_equivalence(&net);
    record("8b", p, d);

    let unexpected: Vec<&Outcome> = out.iter().filter(|o| !o.passed && !KNOWN_RED.contains(&o.id)).collect();
    let known: Vec<&str> = out
        .iter()
        .filter(|o| !o.passed && KNOWN_RED.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let fixed: Vec<&str> = out
        .iter()
        .filter(|o| o.passed && KNOWN_RED.contains(&o.id))
        .map(|o| o.id)
        .collect();
    println!(
        "summary: {} passed, {} failed ({} known: {:?}), {:.1}s",
        out.iter().filter(|o| o.passed).count(),
        out.iter().filter(|o| !o.passed).count(),
        known.len(),
        known,
        start.elapsed().as_secs_f64()
    );
    if !fixed.is_empty() {
        println!("note: known-red criteria now pass: {fixed:?}");
    }
    if !unexpected.is_empty() {
        for o in unexpected {
            eprintln!("unexpected failure {}: {}", o.id, o.detail);
        }
        std::process::exit(1);
    }
}

fn integer_grid() -> Vec<f64> {
    (0..=10).map(f64::from).collect()
}

fn exactness(net: &ReluNet) -> (bool, String) {
    let r = verify_net(net, &integer_grid(), BigM::PerNode);
    let count = |c: Check| r.cases.iter().filter(|k| k.check == c && k.passed).count();
    let worst = r
        .cases
        .iter()
        .filter(|c| c.check != Check::ReluPlusMaxUnbounded)
        .map(|c| (c.theta - c.expected).abs())
        .fold(0.0, f64::max);
    let ok = [Check::ReluPlusMin, Check::ClassicMin, Check::ClassicMax]
        .iter()
        .all(|&c| count(c) == 11)
        && worst <= EXACTNESS_TOL;
    (
        ok,
        format!(
            "x in 0..=10: relu+ min {}/11, classic min {}/11, classic max {}/11, max |theta - f(x)| = {worst:.2e} (tol {EXACTNESS_TOL:.0e})",
            count(Check::ReluPlusMin),
            count(Check::ClassicMin),
            count(Check::ClassicMax)
        ),
    )
}

fn relu_plus_unbounded(net: &ReluNet) -> (bool, String) {
    let r = verify_net(net, &integer_grid(), BigM::PerNode);
    let cases: Vec<_> = r
        .cases
        .iter()
        .filter(|c| c.check == Check::ReluPlusMaxUnbounded)
        .collect();
    let n = cases.iter().filter(|c| c.passed).count();
    (
        n == 11 && cases.len() == 11,
        format!("max theta over the binary-free polytope with fixed input reported Unbounded at {n}/11 points"),
    )
}

/// Seeded instance with `n` classes and at most four copies each; capacity
/// is recomputed with the usual half-of-total rule after clamping.
fn small_instance(n: usize, seed: u64) -> KnapsackInstance {
    let mut inst = KnapsackInstance::generate(n, seed).unwrap();
    inst.m.iter_mut().for_each(|m| *m = (*m).min(4));
    inst.capacity = inst.s.iter().zip(&inst.m).map(|(s, m)| s * m).sum::<i64>() / 2;
    inst
}

fn oracle_equivalence(net: &ReluNet) -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for seed in 1..=50u64 {
        let n = 1 + (seed as usize - 1) % 6;
        let inst = small_instance(n, seed);
        let nn = oracle_nn(&inst, net).unwrap();
        for enc in [Encoding::ReluPlus, Encoding::Classic] {
            let km = build_model(&inst, net, enc, BigM::PerNode).unwrap();
            match solve_milp(&km.model, &MilpConfig::default()) {
                Ok(r) if r.status == MilpStatus::Optimal => {
                    let err = (r.objective - nn.objective).abs();
                    worst = worst.max(err);
                    if err > OBJ_TOL {
                        bad.push(format!("seed {seed} {}", enc.name()));
                    }
                }
                other => bad.push(format!("seed {seed} {}: {:?}", enc.name(), other.map(|r| r.status))),
            }
        }
        let exact = oracle_with(&inst, DEFAULT_ENUM_BUDGET, |k| (k * k) as f64).unwrap();
        let truth = oracle_true(&inst).unwrap();
        if exact.objective != truth.objective || inst.true_objective(&truth.x) as f64 != truth.objective {
            bad.push(format!("seed {seed}: exact-square oracle mismatch"));
        }
    }
    (
        bad.is_empty(),
        format!("50 instances (n 1..6, m <= 4): max |milp - oracle_nn| = {worst:.2e} (tol {OBJ_TOL:.0e}); mismatches {bad:?}"),
    )
}

fn encoding_sizes(net: &ReluNet) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut nets = vec![net.clone()];
    for _ in 0..5 {
        let depth = rng.gen_range(1..=4);
        let mut sizes = vec![1];
        sizes.extend((0..depth).map(|_| rng.gen_range(1..=12)));
        sizes.push(1);
        let weights = (0..sizes.len() - 1)
            .map(|l| {
                (0..sizes[l])
                    .map(|_| (0..sizes[l + 1]).map(|_| rng.gen_range(0.0..1.0)).collect())
                    .collect()
            })
            .collect();
        let biases = (1..sizes.len())
            .map(|l| (0..sizes[l]).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        nets.push(ReluNet::from_dense(sizes, weights, biases).unwrap());
    }
    let mut ok = true;
    let mut shapes = Vec::new();
    for n in &nets {
        let hidden: usize = n.hidden_sizes().iter().sum();
        for enc in [Encoding::ReluPlus, Encoding::Classic] {
            let mut m = LinModel::new(Sense::Minimize);
            let x = m.add_var("x", VarKind::Continuous, 0.0, 10.0).unwrap();
            encode(&mut m, n, x, "c0", enc, BigM::PerNode).unwrap();
            let st = m.stats();
            let (cons, bins) = match enc {
                Encoding::ReluPlus => (hidden + 1, 0),
                Encoding::Classic => (3 * hidden + 1, hidden),
            };
            let size = embedding_size(n.layer_sizes(), enc);
            ok &= st.constraints == cons
                && st.binary == bins
                && st.continuous - 1 == hidden + 1
                && st.integer == 0
                && size.constraints == cons
                && size.binary == bins
                && size.continuous == hidden + 1;
        }
        shapes.push(format!("{:?}", n.layer_sizes()));
    }
    let fixture = embedding_size(net.layer_sizes(), Encoding::Classic);
    (
        ok && fixture.constraints == 40
            && fixture.binary == 13
            && embedding_size(net.layer_sizes(), Encoding::ReluPlus).constraints == 14,
        format!(
            "counts match closed forms (fixture: relu+ 14 rows/14 cont, classic 40 rows/14 cont/13 bin) for {}",
            shapes.join(" ")
        ),
    )
}

fn ordering(net: &ReluNet, n: usize, time_limit: Option<Duration>) -> (bool, String) {
    let cfg = BenchConfig {
        n_list: vec![n],
        seeds: (1..=30).collect(),
        milp: MilpConfig {
            time_limit,
            ..Default::default()
        },
        ..Default::default()
    };
    let report = run_bench(net, &cfg).unwrap();
    let pick = |enc: Encoding| -> Vec<&BenchRun> { report.runs.iter().filter(|r| r.encoding == enc.name()).collect() };
    let (rp, cl) = (pick(Encoding::ReluPlus), pick(Encoding::Classic));
    let limits = report.runs.iter().filter(|r| r.limit_reached).count();
    let agg = |enc: Encoding| report.aggregates.iter().find(|a| a.encoding == enc.name()).unwrap();
    let (a_rp, a_cl) = (agg(Encoding::ReluPlus), agg(Encoding::Classic));
    if limits > 0 {
        let gap = |runs: &[&BenchRun]| {
            runs.iter()
                .filter(|r| r.limit_reached)
                .map(|r| {
                    if r.objective.is_finite() {
                        (r.bound - r.objective) / r.objective.abs()
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max)
        };
        return (
            false,
            format!(
                "n={n}: {limits}/60 solves hit the {:.0?} limit (relu+ {}, worst gap {:.2e}; classic {}, worst gap {:.2e}); optimality not proven",
                time_limit.unwrap_or_default(),
                a_rp.limit_reached,
                gap(&rp),
                a_cl.limit_reached,
                gap(&cl)
            ),
        );
    }
    let worst = rp
        .iter()
        .zip(&cl)
        .map(|(a, b)| (a.objective - b.objective).abs())
        .fold(0.0, f64::max);
    let ok = worst <= OBJ_TOL && a_rp.mean_solve_ms < a_cl.mean_solve_ms;
    (
        ok,
        format!(
            "n={n}, 30 seeds: mean solve relu+ {:.1} ms (sd {:.1}) vs classic {:.1} ms (sd {:.1}); max objective diff {worst:.2e} (tol {OBJ_TOL:.0e})",
            a_rp.mean_solve_ms, a_rp.std_solve_ms_population, a_cl.mean_solve_ms, a_cl.std_solve_ms_population
        ),
    )
}

fn fixture_fidelity(net: &ReluNet) -> (bool, String) {
    let ys: Vec<f64> = (0..=1000).map(|i| net.forward(i as f64 * 0.01)).collect();
    let monotone = ys.windows(2).all(|w| w[1] >= w[0]);
    let err = (0..=10)
        .map(|x| (net.forward(x as f64) - (x * x) as f64).abs())
        .fold(0.0, f64::max);
    let f0 = net.forward(0.0);
    let ok = monotone && (f0 - F0_HAND).abs() <= F0_TOL && (err - PINNED_SQUARE_ERR).abs() <= 1e-3;
    (
        ok,
        format!("monotone on 0..10 step 0.01: {monotone}; max |f(x) - x^2| on 0..=10 = {err:.6} (pinned {PINNED_SQUARE_ERR}); f(0) = {f0:.6}"),
    )
}

/// Random LP that is feasible by construction: rows are built around a
/// point inside the variable box.
fn random_lp(rng: &mut ChaCha8Rng, integer: bool) -> LinModel {
    let nv = rng.gen_range(2..=if integer { 4 } else { 8 });
    let nc = rng.gen_range(1..=6);
    let sense = if rng.gen_bool(0.5) {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut m = LinModel::new(sense);
    let kind = if integer { VarKind::Integer } else { VarKind::Continuous };
    let vars: Vec<_> = (0..nv)
        .map(|i| {
            m.add_var(format!("v{i}"), kind, 0.0, rng.gen_range(1..=5) as f64)
                .unwrap()
        })
        .collect();
    let point: Vec<f64> = vars.iter().map(|v| rng.gen_range(0.0..=m.var(*v).ub)).collect();
    for c in 0..nc {
        let terms: Vec<_> = vars.iter().map(|&v| (v, rng.gen_range(-5..=5) as f64)).collect();
        let lhs: f64 = terms.iter().map(|&(v, a)| a * point[v.0]).sum();
        let slack = rng.gen_range(0.0..3.0);
        // integer programs get rounded right-hand sides and may be infeasible
        let (rel, rhs) = match (rng.gen_range(0..3), integer) {
            (0, false) => (Relation::Le, lhs + slack),
            (1, false) => (Relation::Ge, lhs - slack),
            (_, false) => (Relation::Eq, lhs),
            (0, true) => (Relation::Le, (lhs + slack).floor()),
            (1, true) => (Relation::Ge, (lhs - slack).ceil()),
            (_, true) => (Relation::Le, lhs.ceil() + 1.0),
        };
        m.add_constraint(format!("r{c}"), terms, rel, rhs).unwrap();
    }
    m.set_objective(sense, vars.iter().map(|&v| (v, rng.gen_range(-10..=10) as f64)), 0.0)
        .unwrap();
    m
}

fn random_lps() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut non_optimal = 0;
    for _ in 0..200 {
        let m = random_lp(&mut rng, false);
        match solve_lp(&m, true) {
            Ok(r) if r.status == LpStatus::Optimal => worst = worst.max(m.max_violation(&r.x)),
            other => {
                println!("  non-optimal LP: {:?}", other.map(|r| r.status));
                non_optimal += 1;
            }
        }
    }
    (
        non_optimal == 0 && worst <= LP_FEAS_TOL,
        format!("200 feasible bounded LPs: {non_optimal} not optimal; max violation at optimum {worst:.2e} (tol {LP_FEAS_TOL:.0e})"),
    )
}

fn enumerate(m: &LinModel) -> Option<f64> {
    let ubs: Vec<i64> = m.vars().iter().map(|v| v.ub as i64).collect();
    let mut x = vec![0i64; ubs.len()];
    let mut best: Option<f64> = None;
    loop {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        if m.max_violation(&xf) <= 1e-9 {
            let v = m.objective_value(&xf);
            let better = match (best, m.objective().sense) {
                (None, _) => true,
                (Some(b), Sense::Maximize) => v > b,
                (Some(b), Sense::Minimize) => v < b,
            };
            if better {
                best = Some(v);
            }
        }
        let mut i = 0;
        while i < x.len() && x[i] == ubs[i] {
            x[i] = 0;
            i += 1;
        }
        if i == x.len() {
            return best;
        }
        x[i] += 1;
    }
}

fn random_milps() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    let mut infeasible = 0;
    for _ in 0..100 {
        let m = random_lp(&mut rng, true);
        let truth = enumerate(&m);
        match (solve_milp(&m, &MilpConfig::default()), truth) {
            (Ok(r), Some(t)) if r.status == MilpStatus::Optimal => {
                let err = (r.objective - t).abs();
                worst = worst.max(err);
                if err > MILP_TOL || m.max_violation(&r.x) > LP_FEAS_TOL {
                    bad += 1;
                }
            }
            (Ok(r), None) if r.status == MilpStatus::Infeasible => infeasible += 1,
            _ => bad += 1,
        }
    }
    (
        bad == 0,
        format!("100 integer programs vs enumeration: {bad} mismatches ({infeasible} agreed infeasible); max objective error {worst:.2e} (tol {MILP_TOL:.0e})"),
    )
}

fn big_m_dominance(net: &ReluNet) -> (bool, String) {
    let bounds = propagate_bounds(net, (0.0, 10.0));
    let mut slack = f64::INFINITY;
    for i in 0..=10_000 {
        let t = net.forward_trace(i as f64 * 0.001);
        for (l, layer) in t.pre.iter().enumerate() {
            for (j, &pre) in layer.iter().enumerate() {
                let m = bounds.big_m(l + 1, j);
                slack = slack.min(m - pre).min(m + pre);
            }
        }
    }
    (
        slack >= 0.0,
        format!("per-node M vs 10,001 sampled pre-activations on [0,10]: min(M - |pre|) = {slack:.6}"),
    )
}

fn big_m_equivalence(net: &ReluNet) -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for seed in 1..=10u64 {
        let inst = KnapsackInstance::generate(10, seed).unwrap();
        let mut objs = Vec::new();
        for bm in [BigM::PerNode, BigM::Global(1e5)] {
            let km = build_model(&inst, net, Encoding::Classic, bm).unwrap();
            match solve_milp(&km.model, &MilpConfig::default()) {
                Ok(r) if r.status == MilpStatus::Optimal => objs.push(r.objective),
                _ => failures += 1,
            }
        }
        if objs.len() == 2 {
            worst = worst.max((objs[0] - objs[1]).abs());
        }
    }
    (
        failures == 0 && worst <= OBJ_TOL,
        format!("10 instances at n=10, classic per-node vs global M=1e5: max objective diff {worst:.2e} (tol {OBJ_TOL:.0e}), {failures} failed solves"),
    )
}
