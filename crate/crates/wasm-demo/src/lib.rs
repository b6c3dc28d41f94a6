//! Browser bindings for the demo page. Every function returns a JSON string.

use nnembed::knapsack::{build_model, oracle_nn};
use nnembed::model::Sense;
use nnembed::verify::fixed_input_model;
use nnembed::*;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest instance the page will solve; bigger ones take too long in a tab.
const MAX_N: usize = 12;

fn error(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

/// Samples the fixture network and `x^2` on `[0, 10]`.
#[wasm_bindgen]
pub fn forward_curve(samples: usize) -> String {
    let net = square_fixture();
    let k = samples.clamp(2, 10_001);
    let xs: Vec<f64> = (0..k).map(|i| 10.0 * i as f64 / (k - 1) as f64).collect();
    let f: Vec<f64> = xs.iter().map(|&x| net.forward(x)).collect();
    let sq: Vec<f64> = xs.iter().map(|&x| x * x).collect();
    json!({ "x": xs, "f": f, "square": sq }).to_string()
}

/// Embeds the network with its input fixed to `x` and reports what the
/// solver returns for `min theta` and `max theta` under one encoding.
#[wasm_bindgen]
pub fn check_embedding(x: f64, encoding: &str) -> String {
    let enc: Encoding = match encoding.parse() {
        Ok(e) => e,
        Err(e) => return error(e),
    };
    if !(0.0..=10.0).contains(&x) {
        return error("x must lie in [0, 10]");
    }
    let net = square_fixture();
    let mut out = json!({ "x": x, "encoding": enc.name(), "forward": net.forward(x) });
    for (key, sense) in [("min", Sense::Minimize), ("max", Sense::Maximize)] {
        let (model, h) = match fixed_input_model(&net, x, enc, sense, BigM::PerNode, (0.0, 10.0)) {
            Ok(m) => m,
            Err(e) => return error(e),
        };
        out[key] = match solve_milp(&model, &MilpConfig::default()) {
            Ok(r) if r.status == MilpStatus::Optimal => json!({ "status": "Optimal", "theta": r.x[h.output.0] }),
            Ok(r) => json!({ "status": format!("{:?}", r.status) }),
            Err(e) => json!({ "status": e.to_string() }),
        };
    }
    out.to_string()
}

/// Generates a seeded instance and solves it with both encodings, plus the
/// exhaustive oracle when it is small enough.
#[wasm_bindgen]
pub fn solve_knapsack(n: usize, seed: u64) -> String {
    if n == 0 || n > MAX_N {
        return error(format!("n must be in 1..={MAX_N}"));
    }
    let net = square_fixture();
    let inst = match KnapsackInstance::generate(n, seed) {
        Ok(i) => i,
        Err(e) => return error(e),
    };
    let mut runs = Vec::new();
    for enc in [Encoding::ReluPlus, Encoding::Classic] {
        let km = match build_model(&inst, &net, enc, BigM::PerNode) {
            Ok(k) => k,
            Err(e) => return error(e),
        };
        let st = km.model.stats();
        let run: Value = match solve_milp(&km.model, &MilpConfig::default()) {
            Ok(r) => {
                let x: Vec<i64> = km.x.iter().map(|v| r.x[v.0].round() as i64).collect();
                json!({
                    "encoding": enc.name(),
                    "status": format!("{:?}", r.status),
                    "objective": r.objective,
                    "true_objective": inst.true_objective(&x),
                    "X": x,
                    "nodes": r.nodes,
                    "simplex_iterations": r.simplex_iterations,
                    "variables": st.variables(),
                    "binaries": st.binary,
                    "constraints": st.constraints,
                })
            }
            Err(e) => json!({ "encoding": enc.name(), "status": e.to_string() }),
        };
        runs.push(run);
    }
    let oracle = oracle_nn(&inst, &net)
        .ok()
        .map(|o| json!({ "objective": o.objective, "X": o.x }));
    json!({ "instance": serde_json::from_str::<Value>(&inst.to_json()).unwrap_or(Value::Null), "runs": runs, "oracle": oracle })
        .to_string()
}
