//! Compiles a [`ReluNet`] into model rows.
//!
//! Both encodings declare one `sigma` per hidden node (lower bound 0) and a
//! free output `theta`. Per hidden node:
//!
//! * Classic (big-M): `sigma >= pre`, `sigma <= M y`, `sigma <= pre + M (1 - y)`
//!   with binary `y`;
//! * ReluPlus: `sigma >= pre` only.
//!
//! Both finish with `theta = sum_j w_j sigma_{I,j} + b_out`.
//!
//! ReluPlus is exact only under two conditions: every weight is non-negative,
//! and the host objective improves whenever `theta` decreases. The first is
//! checked here; the second belongs to the host model and is recorded in the
//! returned handle.

use thiserror::Error;

use crate::model::{ConId, LinModel, ModelError, Relation, VarId, VarKind};
use crate::relu_net::{ReluNet, WeightIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    Classic,
    ReluPlus,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Classic => "classic",
            Encoding::ReluPlus => "reluplus",
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "classic" => Ok(Encoding::Classic),
            "reluplus" | "relu+" | "relu_plus" => Ok(Encoding::ReluPlus),
            other => Err(format!("unknown encoding {other:?} (expected classic or reluplus)")),
        }
    }
}

/// How big-M constants are chosen for the classic encoding.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BigM {
    /// Per-node constants from interval bound propagation.
    #[default]
    PerNode,
    /// One constant for every node.
    Global(f64),
}

impl std::str::FromStr for BigM {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("pernode") {
            return Ok(BigM::PerNode);
        }
        if let Some(v) = s.strip_prefix("global:").or_else(|| s.strip_prefix("GLOBAL:")) {
            let m: f64 = v.parse().map_err(|e| format!("bad global big-M {v:?}: {e}"))?;
            if !(m.is_finite() && m > 0.0) {
                return Err(format!("global big-M must be positive and finite, got {m}"));
            }
            return Ok(BigM::Global(m));
        }
        Err(format!("unknown big-M policy {s:?} (expected pernode or global:VALUE)"))
    }
}

impl std::fmt::Display for BigM {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BigM::PerNode => f.write_str("pernode"),
            BigM::Global(m) => write!(f, "global:{m}"),
        }
    }
}

/// Smallest per-node M handed out, so a node that is dead over the whole
/// input interval still gets a positive constant.
pub const BIG_M_FLOOR: f64 = 1e-6;

/// Pre-activation intervals of every hidden node over an input interval.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBounds {
    pub input: (f64, f64),
    /// `pre[l][j]` is the interval of node `j` in hidden layer `l + 1`.
    pub pre: Vec<Vec<(f64, f64)>>,
}

impl NodeBounds {
    /// Interval of node `j` in hidden layer `layer` (1-based).
    pub fn interval(&self, layer: usize, j: usize) -> (f64, f64) {
        self.pre[layer - 1][j]
    }

    /// Big-M constant for node `(layer, j)`. It must dominate both the
    /// largest pre-activation (for `sigma <= M y`) and the most negative one
    /// (for `sigma <= pre + M (1 - y)` with `y = 0`).
    pub fn big_m(&self, layer: usize, j: usize) -> f64 {
        let (lo, hi) = self.interval(layer, j);
        hi.max(-lo).max(BIG_M_FLOOR)
    }
}

/// Interval bound propagation through the hidden layers.
pub fn propagate_bounds(net: &ReluNet, input: (f64, f64)) -> NodeBounds {
    let (x_lo, x_hi) = input;
    assert!(x_lo <= x_hi, "empty input interval [{x_lo}, {x_hi}]");
    let mut prev = vec![(x_lo, x_hi)];
    let mut pre = Vec::with_capacity(net.hidden_layer_count());
    for layer in 1..=net.hidden_layer_count() {
        let size = net.layer_sizes()[layer];
        let mut cur = Vec::with_capacity(size);
        for j in 0..size {
            let mut lo = net.bias(layer, j);
            let mut hi = lo;
            for (j_hat, &(plo, phi)) in prev.iter().enumerate() {
                let w = net.weight(j_hat, layer, j);
                if w >= 0.0 {
                    lo += w * plo;
                    hi += w * phi;
                } else {
                    lo += w * phi;
                    hi += w * plo;
                }
            }
            cur.push((lo, hi));
        }
        prev = cur.iter().map(|&(lo, hi)| (lo.max(0.0), hi.max(0.0))).collect();
        pre.push(cur);
    }
    NodeBounds { input, pre }
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("input variable {0:?} needs finite bounds for the big-M encoding")]
    InfiniteInputBounds(String),
    #[error("input variable bounds [{lb}, {ub}] are not covered by the propagated interval [{lo}, {hi}]")]
    InputOutsideBounds { lb: f64, ub: f64, lo: f64, hi: f64 },
    #[error("network has negative weights at {0:?}; the binary-free encoding needs all weights >= 0")]
    NegativeWeightRejected(Vec<WeightIndex>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Everything an encoder added to a model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingHandle {
    pub encoding: Encoding,
    pub input: VarId,
    pub output: VarId,
    /// `sigma[l][j]` for hidden layer `l + 1`.
    pub sigma: Vec<Vec<VarId>>,
    /// Activation binaries, same shape as `sigma`; empty for ReluPlus.
    pub y: Vec<Vec<VarId>>,
    pub constraints: Vec<ConId>,
    /// Big-M constants used, same shape as `sigma`; empty for ReluPlus.
    pub big_m: Vec<Vec<f64>>,
    /// The output equals the network value only at optima where the host
    /// objective pushes `output` down.
    pub requires_min_pressure: bool,
}

/// Closed-form size of one embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingSize {
    /// `sigma` variables plus `theta`.
    pub continuous: usize,
    pub binary: usize,
    pub constraints: usize,
}

pub fn embedding_size(layer_sizes: &[usize], encoding: Encoding) -> EmbeddingSize {
    let hidden: usize = layer_sizes[1..layer_sizes.len() - 1].iter().sum();
    match encoding {
        Encoding::Classic => EmbeddingSize {
            continuous: hidden + 1,
            binary: hidden,
            constraints: 3 * hidden + 1,
        },
        Encoding::ReluPlus => EmbeddingSize {
            continuous: hidden + 1,
            binary: 0,
            constraints: hidden + 1,
        },
    }
}

fn sigma_name(layer: usize, j: usize, tag: &str) -> String {
    format!("sigma_{layer}_{j}_{tag}")
}

/// Terms of `sum_{j_hat} W[j_hat, layer, j] * prev[j_hat]`.
fn incoming(net: &ReluNet, layer: usize, j: usize, input: VarId, sigma: &[Vec<VarId>]) -> Vec<(VarId, f64)> {
    if layer == 1 {
        vec![(input, net.weight(0, 1, j))]
    } else {
        sigma[layer - 2]
            .iter()
            .enumerate()
            .map(|(j_hat, &s)| (s, net.weight(j_hat, layer, j)))
            .collect()
    }
}

fn declare_sigma(model: &mut LinModel, net: &ReluNet, tag: &str) -> Result<Vec<Vec<VarId>>, ModelError> {
    (1..=net.hidden_layer_count())
        .map(|layer| {
            (0..net.layer_sizes()[layer])
                .map(|j| model.add_var(sigma_name(layer, j, tag), VarKind::Continuous, 0.0, f64::INFINITY))
                .collect()
        })
        .collect()
}

fn emit_output(
    model: &mut LinModel,
    net: &ReluNet,
    tag: &str,
    sigma: &[Vec<VarId>],
    constraints: &mut Vec<ConId>,
) -> Result<VarId, ModelError> {
    let out_layer = net.hidden_layer_count() + 1;
    let theta = model.add_var(
        format!("theta_{tag}"),
        VarKind::Continuous,
        f64::NEG_INFINITY,
        f64::INFINITY,
    )?;
    let mut terms = vec![(theta, 1.0)];
    terms.extend(
        sigma[out_layer - 2]
            .iter()
            .enumerate()
            .map(|(j_hat, &s)| (s, -net.weight(j_hat, out_layer, 0))),
    );
    constraints.push(model.add_constraint(format!("out_{tag}"), terms, Relation::Eq, net.bias(out_layer, 0))?);
    Ok(theta)
}

/// Adds the big-M encoding of `net` with input `input` to `model`.
pub fn encode_classic(
    model: &mut LinModel,
    net: &ReluNet,
    input: VarId,
    tag: &str,
    bounds: &NodeBounds,
    big_m: BigM,
) -> Result<EmbeddingHandle, EmbedError> {
    let var = model.var(input);
    if !(var.lb.is_finite() && var.ub.is_finite()) {
        return Err(EmbedError::InfiniteInputBounds(var.name.clone()));
    }
    if var.lb < bounds.input.0 || var.ub > bounds.input.1 {
        return Err(EmbedError::InputOutsideBounds {
            lb: var.lb,
            ub: var.ub,
            lo: bounds.input.0,
            hi: bounds.input.1,
        });
    }

    let sigma = declare_sigma(model, net, tag)?;
    let mut y = Vec::with_capacity(sigma.len());
    let mut ms = Vec::with_capacity(sigma.len());
    let mut constraints = Vec::new();
    for layer in 1..=net.hidden_layer_count() {
        let mut y_layer = Vec::new();
        let mut m_layer = Vec::new();
        for j in 0..net.layer_sizes()[layer] {
            let s = sigma[layer - 1][j];
            let yv = model.add_var(format!("y_{layer}_{j}_{tag}"), VarKind::Binary, 0.0, 1.0)?;
            let m = match big_m {
                BigM::PerNode => bounds.big_m(layer, j),
                BigM::Global(m) => m,
            };
            let b = net.bias(layer, j);
            let pre = incoming(net, layer, j, input, &sigma);

            // sigma - pre >= b
            let mut lower = vec![(s, 1.0)];
            lower.extend(pre.iter().map(|&(v, w)| (v, -w)));
            constraints.push(model.add_constraint(
                format!("relu_lb_{layer}_{j}_{tag}"),
                lower.clone(),
                Relation::Ge,
                b,
            )?);
            // sigma - M y <= 0
            constraints.push(model.add_constraint(
                format!("relu_off_{layer}_{j}_{tag}"),
                [(s, 1.0), (yv, -m)],
                Relation::Le,
                0.0,
            )?);
            // sigma - pre + M y <= b + M
            let mut upper = lower;
            upper.push((yv, m));
            constraints.push(model.add_constraint(format!("relu_on_{layer}_{j}_{tag}"), upper, Relation::Le, b + m)?);

            y_layer.push(yv);
            m_layer.push(m);
        }
        y.push(y_layer);
        ms.push(m_layer);
    }
    let output = emit_output(model, net, tag, &sigma, &mut constraints)?;
    Ok(EmbeddingHandle {
        encoding: Encoding::Classic,
        input,
        output,
        sigma,
        y,
        constraints,
        big_m: ms,
        requires_min_pressure: false,
    })
}

/// Adds the binary-free encoding of `net` with input `input` to `model`.
pub fn encode_relu_plus(
    model: &mut LinModel,
    net: &ReluNet,
    input: VarId,
    tag: &str,
) -> Result<EmbeddingHandle, EmbedError> {
    let report = net.check_nonneg();
    if !report.compatible {
        return Err(EmbedError::NegativeWeightRejected(report.violations));
    }
    let sigma = declare_sigma(model, net, tag)?;
    let mut constraints = Vec::new();
    for layer in 1..=net.hidden_layer_count() {
        for j in 0..net.layer_sizes()[layer] {
            let mut terms = vec![(sigma[layer - 1][j], 1.0)];
            terms.extend(incoming(net, layer, j, input, &sigma).into_iter().map(|(v, w)| (v, -w)));
            constraints.push(model.add_constraint(
                format!("relu_lb_{layer}_{j}_{tag}"),
                terms,
                Relation::Ge,
                net.bias(layer, j),
            )?);
        }
    }
    let output = emit_output(model, net, tag, &sigma, &mut constraints)?;
    Ok(EmbeddingHandle {
        encoding: Encoding::ReluPlus,
        input,
        output,
        sigma,
        y: Vec::new(),
        constraints,
        big_m: Vec::new(),
        requires_min_pressure: true,
    })
}

/// Encodes with either scheme; the classic path propagates bounds from the
/// input variable's own bounds.
pub fn encode(
    model: &mut LinModel,
    net: &ReluNet,
    input: VarId,
    tag: &str,
    encoding: Encoding,
    big_m: BigM,
) -> Result<EmbeddingHandle, EmbedError> {
    match encoding {
        Encoding::ReluPlus => encode_relu_plus(model, net, input, tag),
        Encoding::Classic => {
            let v = model.var(input);
            if !(v.lb.is_finite() && v.ub.is_finite()) {
                return Err(EmbedError::InfiniteInputBounds(v.name.clone()));
            }
            let bounds = propagate_bounds(net, (v.lb, v.ub));
            encode_classic(model, net, input, tag, &bounds, big_m)
        }
    }
}
