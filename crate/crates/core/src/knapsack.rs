//! Bounded knapsack with a quadratic per-class penalty: instance generation,
//! model building with an embedded network, and exhaustive oracles.
//!
//! True objective: `max sum_c v_c X_c - p_c (X_c^2 - X_c)` subject to
//! `sum_c s_c X_c <= S` and `0 <= X_c <= m_c` integer. The embedded models
//! replace `X_c^2` with the network output `theta_c`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{encode, BigM, EmbedError, EmbeddingHandle, Encoding};
use crate::model::{ConId, LinModel, Relation, Sense, VarId, VarKind};
use crate::relu_net::ReluNet;

pub const RNG_NAME: &str = "ChaCha8Rng/seed_from_u64";
pub const CAPACITY_RULE: &str = "floor(0.5*sum(s*m))";
pub const VALUE_RANGE: (i64, i64) = (50, 150);
pub const SIZE_RANGE: (i64, i64) = (10, 20);
pub const PENALTY_RANGE: (i64, i64) = (5, 15);
pub const COPIES_RANGE: (i64, i64) = (2, 10);
pub const DEFAULT_ENUM_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub n: usize,
    /// Profit per copy.
    pub v: Vec<i64>,
    /// Size per copy.
    pub s: Vec<i64>,
    /// Penalty coefficient.
    pub p: Vec<i64>,
    /// Copy limit.
    pub m: Vec<i64>,
    #[serde(rename = "S")]
    pub capacity: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rng")]
    pub rng: String,
    #[serde(default = "default_rule")]
    pub capacity_rule: String,
}

fn default_rng() -> String {
    RNG_NAME.into()
}

fn default_rule() -> String {
    "explicit".into()
}

#[derive(Debug, Error)]
pub enum KnapsackError {
    #[error("instance needs at least one class")]
    Empty,
    #[error("instance arrays disagree with n = {n}")]
    Shape { n: usize },
    #[error("class {class} has a negative copy limit or size")]
    NegativeData { class: usize },
    #[error("enumeration needs {needed} points, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl KnapsackInstance {
    /// Draws an instance: per class, `v`, `s`, `p`, `m` in that order from
    /// uniform integer ranges, then `S = floor(0.5 * sum s_c m_c)`.
    pub fn generate(n: usize, seed: u64) -> Result<Self, KnapsackError> {
        if n == 0 {
            return Err(KnapsackError::Empty);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut v, mut s, mut p, mut m) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for _ in 0..n {
            v.push(rng.gen_range(VALUE_RANGE.0..=VALUE_RANGE.1));
            s.push(rng.gen_range(SIZE_RANGE.0..=SIZE_RANGE.1));
            p.push(rng.gen_range(PENALTY_RANGE.0..=PENALTY_RANGE.1));
            m.push(rng.gen_range(COPIES_RANGE.0..=COPIES_RANGE.1));
        }
        let demand: i64 = s.iter().zip(&m).map(|(a, b)| a * b).sum();
        Ok(Self {
            n,
            v,
            s,
            p,
            m,
            capacity: demand / 2,
            seed,
            rng: RNG_NAME.into(),
            capacity_rule: CAPACITY_RULE.into(),
        })
    }

    pub fn validate(&self) -> Result<(), KnapsackError> {
        if self.n == 0 {
            return Err(KnapsackError::Empty);
        }
        if [&self.v, &self.s, &self.p, &self.m].iter().any(|a| a.len() != self.n) {
            return Err(KnapsackError::Shape { n: self.n });
        }
        if let Some(class) = (0..self.n).find(|&c| self.m[c] < 0 || self.s[c] < 0) {
            return Err(KnapsackError::NegativeData { class });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, KnapsackError> {
        let inst: Self = serde_json::from_str(text).map_err(|e| KnapsackError::Io {
            path: "<json>".into(),
            message: e.to_string(),
        })?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self, KnapsackError> {
        let text = std::fs::read_to_string(path).map_err(|e| KnapsackError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| match e {
            KnapsackError::Io { message, .. } => KnapsackError::Io {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Objective of the true quadratic model at `x`.
    pub fn true_objective(&self, x: &[i64]) -> i64 {
        (0..self.n)
            .map(|c| self.v[c] * x[c] - self.p[c] * (x[c] * x[c] - x[c]))
            .sum()
    }

    /// Objective with `X_c^2` replaced by `square(X_c)`.
    pub fn surrogate_objective(&self, x: &[i64], square: impl Fn(i64) -> f64) -> f64 {
        (0..self.n)
            .map(|c| self.v[c] as f64 * x[c] as f64 - self.p[c] as f64 * (square(x[c]) - x[c] as f64))
            .sum()
    }

    pub fn is_feasible(&self, x: &[i64]) -> bool {
        x.len() == self.n
            && (0..self.n).all(|c| 0 <= x[c] && x[c] <= self.m[c])
            && (0..self.n).map(|c| self.s[c] * x[c]).sum::<i64>() <= self.capacity
    }

    fn enumeration_size(&self) -> u128 {
        self.m
            .iter()
            .map(|&m| m.max(0) as u128 + 1)
            .fold(1u128, |a, b| a.saturating_mul(b))
    }
}

/// A knapsack model with its embedded networks.
#[derive(Debug, Clone)]
pub struct KnapsackModel {
    pub model: LinModel,
    pub encoding: Encoding,
    /// `X_c`.
    pub x: Vec<VarId>,
    pub embeddings: Vec<EmbeddingHandle>,
    pub capacity: ConId,
}

impl KnapsackModel {
    /// `theta_c` handles.
    pub fn theta(&self) -> Vec<VarId> {
        self.embeddings.iter().map(|e| e.output).collect()
    }
}

/// Builds `max sum (v_c + p_c) X_c - p_c theta_c` with the capacity row,
/// copy limits as bounds on `X_c`, and one embedding per class.
pub fn build_model(
    inst: &KnapsackInstance,
    net: &ReluNet,
    encoding: Encoding,
    big_m: BigM,
) -> Result<KnapsackModel, KnapsackError> {
    inst.validate()?;
    let mut model = LinModel::new(Sense::Maximize);
    let mut x = Vec::with_capacity(inst.n);
    for c in 0..inst.n {
        x.push(
            model
                .add_var(format!("X_{c}"), VarKind::Integer, 0.0, inst.m[c] as f64)
                .map_err(EmbedError::from)?,
        );
        // decide copy counts before any activation indicator
        model.set_priority(x[c], 1).map_err(EmbedError::from)?;
    }
    let capacity = model
        .add_constraint(
            "capacity",
            (0..inst.n).map(|c| (x[c], inst.s[c] as f64)),
            Relation::Le,
            inst.capacity as f64,
        )
        .map_err(EmbedError::from)?;
    let mut embeddings = Vec::with_capacity(inst.n);
    for (c, &xc) in x.iter().enumerate() {
        embeddings.push(encode(&mut model, net, xc, &format!("c{c}"), encoding, big_m)?);
    }
    let mut obj = Vec::with_capacity(2 * inst.n);
    for c in 0..inst.n {
        obj.push((x[c], (inst.v[c] + inst.p[c]) as f64));
        obj.push((embeddings[c].output, -(inst.p[c] as f64)));
    }
    model
        .set_objective(Sense::Maximize, obj, 0.0)
        .map_err(EmbedError::from)?;
    Ok(KnapsackModel {
        model,
        encoding,
        x,
        embeddings,
        capacity,
    })
}

/// Result of an exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub x: Vec<i64>,
    pub objective: f64,
    /// Feasible points visited.
    pub visited: u64,
}

/// Exhaustive maximum of `sum v_c X_c - p_c (square(X_c) - X_c)` over every
/// feasible integer vector, subject to the enumeration budget.
pub fn oracle_with(
    inst: &KnapsackInstance,
    budget: u128,
    square: impl Fn(i64) -> f64,
) -> Result<OracleResult, KnapsackError> {
    inst.validate()?;
    let needed = inst.enumeration_size();
    if needed > budget {
        return Err(KnapsackError::BudgetExceeded { needed, budget });
    }
    let max_m = inst.m.iter().copied().max().unwrap_or(0).max(0);
    let table: Vec<f64> = (0..=max_m).map(&square).collect();
    // per-class gain of taking k copies
    let gain: Vec<Vec<f64>> = (0..inst.n)
        .map(|c| {
            (0..=inst.m[c])
                .map(|k| inst.v[c] as f64 * k as f64 - inst.p[c] as f64 * (table[k as usize] - k as f64))
                .collect()
        })
        .collect();

    struct Search<'a> {
        inst: &'a KnapsackInstance,
        gain: &'a [Vec<f64>],
        cur: Vec<i64>,
        best: Option<(Vec<i64>, f64)>,
        visited: u64,
    }
    impl Search<'_> {
        fn go(&mut self, c: usize, used: i64, value: f64) {
            if c == self.inst.n {
                self.visited += 1;
                let better = match &self.best {
                    None => true,
                    Some((_, b)) => value > *b,
                };
                if better {
                    self.best = Some((self.cur.clone(), value));
                }
                return;
            }
            for k in 0..=self.inst.m[c] {
                let u = used + self.inst.s[c] * k;
                // sizes are non-negative, so the remaining classes cannot free capacity
                if u > self.inst.capacity {
                    break;
                }
                self.cur[c] = k;
                self.go(c + 1, u, value + self.gain[c][k as usize]);
            }
            self.cur[c] = 0;
        }
    }
    let mut search = Search {
        inst,
        gain: &gain,
        cur: vec![0; inst.n],
        best: None,
        visited: 0,
    };
    search.go(0, 0, 0.0);
    match search.best {
        Some((x, _)) => {
            // recompute in class order so equal vectors give bit-identical values
            let objective = inst.surrogate_objective(&x, |k| table[k as usize]);
            Ok(OracleResult {
                x,
                objective,
                visited: search.visited,
            })
        }
        None => Ok(OracleResult {
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
            visited: 0,
        }),
    }
}

/// Exhaustive optimum of the true quadratic model.
pub fn oracle_true(inst: &KnapsackInstance) -> Result<OracleResult, KnapsackError> {
    oracle_with(inst, DEFAULT_ENUM_BUDGET, |k| (k * k) as f64)
}

/// Exhaustive optimum with `X_c^2` replaced by the network output, i.e. what
/// the embedded models optimise.
pub fn oracle_nn(inst: &KnapsackInstance, net: &ReluNet) -> Result<OracleResult, KnapsackError> {
    oracle_with(inst, DEFAULT_ENUM_BUDGET, |k| net.forward(k as f64))
}

/// Exact optimum by dynamic programming over used capacity. Same result as
/// [`oracle_with`] (up to ties) but polynomial in `n * S * max m`, so it also
/// covers instances far beyond the enumeration budget.
pub fn oracle_dp(inst: &KnapsackInstance, square: impl Fn(i64) -> f64) -> Result<OracleResult, KnapsackError> {
    inst.validate()?;
    let states = (inst.capacity.max(0) as u128 + 1) * inst.n as u128;
    if inst.capacity < 0 || states > 1u128 << 32 || inst.m.iter().any(|&m| m > u16::MAX as i64) {
        return Err(KnapsackError::BudgetExceeded {
            needed: states,
            budget: 1u128 << 32,
        });
    }
    let cap = inst.capacity as usize;
    // best[u]: best value using exactly u units of capacity over the classes seen so far
    let mut best = vec![f64::NEG_INFINITY; cap + 1];
    best[0] = 0.0;
    let mut choice: Vec<Vec<u16>> = Vec::with_capacity(inst.n);
    let mut visited = 0u64;
    for c in 0..inst.n {
        let gain: Vec<f64> = (0..=inst.m[c])
            .map(|k| inst.v[c] as f64 * k as f64 - inst.p[c] as f64 * (square(k) - k as f64))
            .collect();
        let mut next = vec![f64::NEG_INFINITY; cap + 1];
        let mut pick = vec![0u16; cap + 1];
        for (u, &b) in best.iter().enumerate() {
            if b == f64::NEG_INFINITY {
                continue;
            }
            for (k, g) in gain.iter().enumerate() {
                let w = u + inst.s[c] as usize * k;
                if w > cap {
                    break;
                }
                visited += 1;
                if b + g > next[w] {
                    next[w] = b + g;
                    pick[w] = k as u16;
                }
            }
        }
        best = next;
        choice.push(pick);
    }
    let Some((mut u, _)) = best
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
    else {
        return Ok(OracleResult {
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
            visited,
        });
    };
    let mut x = vec![0i64; inst.n];
    for c in (0..inst.n).rev() {
        let k = choice[c][u] as i64;
        x[c] = k;
        u -= inst.s[c] as usize * k as usize;
    }
    let objective = inst.surrogate_objective(&x, &square);
    Ok(OracleResult { x, objective, visited })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::square_fixture;

    fn single() -> KnapsackInstance {
        KnapsackInstance {
            n: 1,
            v: vec![100],
            s: vec![10],
            p: vec![10],
            m: vec![3],
            capacity: 25,
            seed: 0,
            rng: RNG_NAME.into(),
            capacity_rule: "explicit".into(),
        }
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let a = KnapsackInstance::generate(10, 1).unwrap();
        assert_eq!(a, KnapsackInstance::generate(10, 1).unwrap());
        assert_ne!(a, KnapsackInstance::generate(10, 2).unwrap());
        for seed in 0..50 {
            let i = KnapsackInstance::generate(7, seed).unwrap();
            for c in 0..i.n {
                assert!((50..=150).contains(&i.v[c]));
                assert!((10..=20).contains(&i.s[c]));
                assert!((5..=15).contains(&i.p[c]));
                assert!((2..=10).contains(&i.m[c]));
            }
            assert!(i.capacity >= *i.s.iter().min().unwrap());
        }
    }

    #[test]
    fn capacity_rule_recomputes() {
        let i = KnapsackInstance::generate(10, 1).unwrap();
        let back = KnapsackInstance::from_json(&i.to_json()).unwrap();
        let demand: i64 = back.s.iter().zip(&back.m).map(|(s, m)| s * m).sum();
        assert_eq!(back.capacity, demand / 2);
        assert_eq!(back.capacity_rule, CAPACITY_RULE);
        assert_eq!(back, i);
    }

    #[test]
    fn zero_classes_rejected() {
        assert!(matches!(KnapsackInstance::generate(0, 1), Err(KnapsackError::Empty)));
        let mut i = single();
        i.n = 0;
        i.v.clear();
        assert!(matches!(
            build_model(&i, &square_fixture(), Encoding::ReluPlus, BigM::PerNode),
            Err(KnapsackError::Empty)
        ));
    }

    #[test]
    fn single_class_oracle() {
        // X=2: 200 - 10*(4-2) = 180; X=3 needs 30 > 25
        let r = oracle_true(&single()).unwrap();
        assert_eq!(r.x, vec![2]);
        assert_eq!(r.objective, 180.0);
        assert_eq!(single().true_objective(&[2]), 180);
    }

    #[test]
    fn empty_knapsack() {
        let mut i = single();
        i.capacity = 0;
        let r = oracle_true(&i).unwrap();
        assert_eq!((r.x, r.objective), (vec![0], 0.0));
    }

    #[test]
    fn symmetric_classes() {
        let mut i = single();
        i.n = 2;
        i.v = vec![100, 100];
        i.s = vec![10, 10];
        i.p = vec![10, 10];
        i.m = vec![3, 3];
        i.capacity = 30;
        let r = oracle_true(&i).unwrap();
        // best splits (2,1) or (1,2): 200 - 20 + 100 = 280
        assert_eq!(r.objective, 280.0);
        let mirrored = vec![r.x[1], r.x[0]];
        assert_eq!(i.true_objective(&mirrored) as f64, r.objective);
    }

    #[test]
    fn exact_square_table_reproduces_true_oracle() {
        for seed in 0..20 {
            let mut i = KnapsackInstance::generate(4, seed).unwrap();
            i.m.iter_mut().for_each(|m| *m = (*m).min(4));
            let a = oracle_true(&i).unwrap();
            let b = oracle_with(&i, DEFAULT_ENUM_BUDGET, |k| (k * k) as f64).unwrap();
            assert_eq!(a, b);
            assert_eq!(i.true_objective(&a.x) as f64, a.objective);
        }
    }

    #[test]
    fn three_point_nn_oracle() {
        let net = square_fixture();
        let mut i = single();
        i.m = vec![2];
        i.capacity = 1000;
        let f: Vec<f64> = (0..=2).map(|k| net.forward(k as f64)).collect();
        let vals: Vec<f64> = (0..=2).map(|k| 100.0 * k as f64 - 10.0 * (f[k] - k as f64)).collect();
        let best = (0..=2).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        let r = oracle_nn(&i, &net).unwrap();
        assert_eq!(r.x, vec![best as i64]);
        assert_eq!(r.objective, vals[best]);
    }

    #[test]
    fn budget_enforced() {
        let i = KnapsackInstance::generate(12, 3).unwrap();
        assert!(matches!(
            oracle_with(&i, 1000, |k| (k * k) as f64),
            Err(KnapsackError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn model_counts() {
        let net = square_fixture();
        let i = KnapsackInstance::generate(10, 1).unwrap();
        let rp = build_model(&i, &net, Encoding::ReluPlus, BigM::PerNode).unwrap();
        let st = rp.model.stats();
        assert_eq!(
            (st.integer, st.continuous, st.binary, st.constraints),
            (10, 140, 0, 141)
        );
        let cl = build_model(&i, &net, Encoding::Classic, BigM::PerNode).unwrap();
        let st = cl.model.stats();
        assert_eq!(
            (st.integer, st.continuous, st.binary, st.constraints),
            (10, 140, 130, 401)
        );
    }

    #[test]
    fn dp_matches_enumeration() {
        let net = square_fixture();
        for seed in 1..=20 {
            let mut inst = KnapsackInstance::generate(5, seed).unwrap();
            inst.m.iter_mut().for_each(|m| *m = (*m).min(4));
            let e = oracle_nn(&inst, &net).unwrap();
            let d = oracle_dp(&inst, |k| net.forward(k as f64)).unwrap();
            assert!((e.objective - d.objective).abs() < 1e-9, "seed {seed}");
        }
    }
}
