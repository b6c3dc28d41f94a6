//! Dense single-input / single-output ReLU feed-forward networks.
//!
//! Layers are numbered the way the weight tables are: layer 0 is the input,
//! layers `1..=I` are hidden (ReLU), layer `I + 1` is the affine output node.
//! Node indices inside a layer are zero-based.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Which parameter table a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Weight,
    Bias,
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Table::Weight => f.write_str("weight"),
            Table::Bias => f.write_str("bias"),
        }
    }
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid layer sizes {0:?}: need at least one hidden layer, a single input and a single output, and no empty layer")]
    InvalidLayerSizes(Vec<usize>),
    #[error("missing {table} cell {index}")]
    MissingCell { table: Table, index: String },
    #[error("{table} cell {index} is outside the declared layer sizes")]
    IndexOutOfRange { table: Table, index: String },
    #[error("duplicate {table} cell {index}")]
    DuplicateCell { table: Table, index: String },
    #[error("{table} value at {index} is not finite")]
    NonFinite { table: Table, index: String },
    #[error("{file}: row {row}: {message}")]
    Parse { file: String, row: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One row of the weight table: connection from node `j_hat` of layer
/// `layer - 1` to node `j` of `layer`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct WeightRecord {
    pub j_hat: usize,
    #[serde(rename = "i")]
    pub layer: usize,
    pub j: usize,
    pub w: f64,
}

/// One row of the bias table.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct BiasRecord {
    #[serde(rename = "i")]
    pub layer: usize,
    pub j: usize,
    pub b: f64,
}

/// Index of a single weight, as printed in the weight table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightIndex {
    pub j_hat: usize,
    pub layer: usize,
    pub j: usize,
}

impl fmt::Display for WeightIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(j_hat={}, i={}, j={})", self.j_hat, self.layer, self.j)
    }
}

/// A validated, immutable ReLU network.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluNet {
    layer_sizes: Vec<usize>,
    // weights[l][j_hat][j] connects layer l to layer l + 1
    weights: Vec<Vec<Vec<f64>>>,
    // biases[l][j] belongs to node j of layer l + 1
    biases: Vec<Vec<f64>>,
    nonneg_certified: bool,
}

/// Outcome of the non-negative weight check required by the binary-free
/// encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonnegReport {
    pub compatible: bool,
    pub violations: Vec<WeightIndex>,
}

/// Per-layer values produced during a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Pre-activations of every hidden layer.
    pub pre: Vec<Vec<f64>>,
    /// Post-ReLU outputs of every hidden layer.
    pub post: Vec<Vec<f64>>,
    pub output: f64,
}

fn check_layer_sizes(layer_sizes: &[usize]) -> Result<(), NetError> {
    let ok = layer_sizes.len() >= 3
        && layer_sizes[0] == 1
        && layer_sizes[layer_sizes.len() - 1] == 1
        && layer_sizes.iter().all(|&s| s > 0);
    if ok {
        Ok(())
    } else {
        Err(NetError::InvalidLayerSizes(layer_sizes.to_vec()))
    }
}

impl ReluNet {
    /// Builds a network from dense weight/bias tables.
    ///
    /// Every weight `(j_hat, i, j)` with `i` in `1..=I+1` and every bias
    /// `(i, j)` with `i` in `1..=I+1` must appear exactly once.
    pub fn from_records(
        weight_records: &[WeightRecord],
        bias_records: &[BiasRecord],
        layer_sizes: &[usize],
    ) -> Result<Self, NetError> {
        check_layer_sizes(layer_sizes)?;
        let depth = layer_sizes.len() - 1;

        let mut weights: Vec<Vec<Vec<Option<f64>>>> = (0..depth)
            .map(|l| vec![vec![None; layer_sizes[l + 1]]; layer_sizes[l]])
            .collect();
        for r in weight_records {
            let idx = WeightIndex {
                j_hat: r.j_hat,
                layer: r.layer,
                j: r.j,
            };
            if r.layer == 0 || r.layer > depth || r.j_hat >= layer_sizes[r.layer - 1] || r.j >= layer_sizes[r.layer] {
                return Err(NetError::IndexOutOfRange {
                    table: Table::Weight,
                    index: idx.to_string(),
                });
            }
            if !r.w.is_finite() {
                return Err(NetError::NonFinite {
                    table: Table::Weight,
                    index: idx.to_string(),
                });
            }
            let cell = &mut weights[r.layer - 1][r.j_hat][r.j];
            if cell.is_some() {
                return Err(NetError::DuplicateCell {
                    table: Table::Weight,
                    index: idx.to_string(),
                });
            }
            *cell = Some(r.w);
        }

        let mut biases: Vec<Vec<Option<f64>>> = (0..depth).map(|l| vec![None; layer_sizes[l + 1]]).collect();
        for r in bias_records {
            let index = format!("(i={}, j={})", r.layer, r.j);
            if r.layer == 0 || r.layer > depth || r.j >= layer_sizes[r.layer] {
                return Err(NetError::IndexOutOfRange {
                    table: Table::Bias,
                    index,
                });
            }
            if !r.b.is_finite() {
                return Err(NetError::NonFinite {
                    table: Table::Bias,
                    index,
                });
            }
            let cell = &mut biases[r.layer - 1][r.j];
            if cell.is_some() {
                return Err(NetError::DuplicateCell {
                    table: Table::Bias,
                    index,
                });
            }
            *cell = Some(r.b);
        }

        let weights = weights
            .into_iter()
            .enumerate()
            .map(|(l, m)| {
                m.into_iter()
                    .enumerate()
                    .map(|(j_hat, row)| {
                        row.into_iter()
                            .enumerate()
                            .map(|(j, w)| {
                                w.ok_or_else(|| NetError::MissingCell {
                                    table: Table::Weight,
                                    index: WeightIndex { j_hat, layer: l + 1, j }.to_string(),
                                })
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let biases = biases
            .into_iter()
            .enumerate()
            .map(|(l, v)| {
                v.into_iter()
                    .enumerate()
                    .map(|(j, b)| {
                        b.ok_or_else(|| NetError::MissingCell {
                            table: Table::Bias,
                            index: format!("(i={}, j={})", l + 1, j),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self::assemble(layer_sizes.to_vec(), weights, biases))
    }

    /// Builds a network directly from dense tensors.
    ///
    /// `weights[l]` has shape `layer_sizes[l] x layer_sizes[l + 1]`.
    pub fn from_dense(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<Vec<f64>>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self, NetError> {
        check_layer_sizes(&layer_sizes)?;
        let depth = layer_sizes.len() - 1;
        let shape_err = |index: String, table| NetError::IndexOutOfRange { table, index };
        if weights.len() != depth {
            return Err(shape_err(format!("layer count {}", weights.len()), Table::Weight));
        }
        if biases.len() != depth {
            return Err(shape_err(format!("layer count {}", biases.len()), Table::Bias));
        }
        for l in 0..depth {
            if weights[l].len() != layer_sizes[l] || weights[l].iter().any(|r| r.len() != layer_sizes[l + 1]) {
                return Err(shape_err(format!("layer {} shape", l + 1), Table::Weight));
            }
            if biases[l].len() != layer_sizes[l + 1] {
                return Err(shape_err(format!("layer {} length", l + 1), Table::Bias));
            }
        }
        let finite =
            weights.iter().flatten().flatten().all(|w| w.is_finite()) && biases.iter().flatten().all(|b| b.is_finite());
        if !finite {
            return Err(NetError::NonFinite {
                table: Table::Weight,
                index: "dense tensor".into(),
            });
        }
        Ok(Self::assemble(layer_sizes, weights, biases))
    }

    fn assemble(layer_sizes: Vec<usize>, weights: Vec<Vec<Vec<f64>>>, biases: Vec<Vec<f64>>) -> Self {
        let nonneg_certified = weights.iter().flatten().flatten().all(|&w| w >= 0.0);
        Self {
            layer_sizes,
            weights,
            biases,
            nonneg_certified,
        }
    }

    /// Loads the weight CSV (`j_hat,i,j,w`), bias CSV (`i,j,b`) and layer
    /// sizes sidecar from disk.
    pub fn load(weights: &Path, biases: &Path, layers: &Path) -> Result<Self, NetError> {
        let layer_sizes = read_layer_sizes(layers)?;
        let w = read_weight_csv(weights)?;
        let b = read_bias_csv(biases)?;
        Self::from_records(&w, &b, &layer_sizes)
    }

    /// Number of hidden layers (`I`).
    pub fn hidden_layer_count(&self) -> usize {
        self.layer_sizes.len() - 2
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// Sizes of the hidden layers only.
    pub fn hidden_sizes(&self) -> &[usize] {
        &self.layer_sizes[1..self.layer_sizes.len() - 1]
    }

    pub fn hidden_node_count(&self) -> usize {
        self.hidden_sizes().iter().sum()
    }

    /// Weight from node `j_hat` of layer `layer - 1` into node `j` of `layer`.
    pub fn weight(&self, j_hat: usize, layer: usize, j: usize) -> f64 {
        self.weights[layer - 1][j_hat][j]
    }

    pub fn bias(&self, layer: usize, j: usize) -> f64 {
        self.biases[layer - 1][j]
    }

    pub fn weight_count(&self) -> usize {
        self.weights.iter().map(|m| m.len() * m[0].len()).sum()
    }

    pub fn bias_count(&self) -> usize {
        self.biases.iter().map(Vec::len).sum()
    }

    /// True iff every weight is non-negative.
    pub fn nonneg_certified(&self) -> bool {
        self.nonneg_certified
    }

    /// Iterates `(index, weight)` over every connection in table order.
    pub fn weights(&self) -> impl Iterator<Item = (WeightIndex, f64)> + '_ {
        self.weights.iter().enumerate().flat_map(|(l, m)| {
            m.iter().enumerate().flat_map(move |(j_hat, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(j, &w)| (WeightIndex { j_hat, layer: l + 1, j }, w))
            })
        })
    }

    /// Returns a copy with one weight replaced.
    pub fn with_weight(&self, idx: WeightIndex, w: f64) -> Self {
        let mut weights = self.weights.clone();
        weights[idx.layer - 1][idx.j_hat][idx.j] = w;
        Self::assemble(self.layer_sizes.clone(), weights, self.biases.clone())
    }

    /// Lists every negative weight.
    pub fn check_nonneg(&self) -> NonnegReport {
        let violations: Vec<_> = self.weights().filter(|&(_, w)| w < 0.0).map(|(i, _)| i).collect();
        NonnegReport {
            compatible: violations.is_empty(),
            violations,
        }
    }

    /// Evaluates the network at `x`.
    pub fn forward(&self, x: f64) -> f64 {
        let mut prev = vec![x];
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut next = b.clone();
            for (j_hat, &v) in prev.iter().enumerate() {
                for (acc, &wij) in next.iter_mut().zip(&w[j_hat]) {
                    *acc += wij * v;
                }
            }
            if l < last {
                for v in &mut next {
                    *v = v.max(0.0);
                }
            }
            prev = next;
        }
        prev[0]
    }

    /// Forward pass that also records every hidden pre- and post-activation.
    pub fn forward_trace(&self, x: f64) -> ForwardTrace {
        let mut pre = Vec::with_capacity(self.hidden_layer_count());
        let mut post = Vec::with_capacity(self.hidden_layer_count());
        let mut prev = vec![x];
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut next = b.clone();
            for (j_hat, &v) in prev.iter().enumerate() {
                for (acc, &wij) in next.iter_mut().zip(&w[j_hat]) {
                    *acc += wij * v;
                }
            }
            if l < last {
                pre.push(next.clone());
                for v in &mut next {
                    *v = v.max(0.0);
                }
                post.push(next.clone());
            }
            prev = next;
        }
        ForwardTrace {
            pre,
            post,
            output: prev[0],
        }
    }
}

/// Loads the network shipped with the crate: 1-3-10-1, trained to
/// approximate `x^2` on the integers `0..=10`, all weights non-negative.
pub fn square_fixture() -> ReluNet {
    let w = parse_weight_csv(include_str!("../fixtures/square_net_weights.csv"), "square_net_weights.csv")
        .expect("bundled weight table parses");
    let b = parse_bias_csv(include_str!("../fixtures/square_net_biases.csv"), "square_net_biases.csv")
        .expect("bundled bias table parses");
    let sizes = parse_layer_sizes(include_str!("../fixtures/square_net_layers.json"), "square_net_layers.json")
        .expect("bundled layer sizes parse");
    ReluNet::from_records(&w, &b, &sizes).expect("bundled network is valid")
}

fn read_to_string(path: &Path) -> Result<String, NetError> {
    std::fs::read_to_string(path).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_weight_csv(path: &Path) -> Result<Vec<WeightRecord>, NetError> {
    parse_weight_csv(&read_to_string(path)?, &path.display().to_string())
}

pub fn read_bias_csv(path: &Path) -> Result<Vec<BiasRecord>, NetError> {
    parse_bias_csv(&read_to_string(path)?, &path.display().to_string())
}

pub fn read_layer_sizes(path: &Path) -> Result<Vec<usize>, NetError> {
    parse_layer_sizes(&read_to_string(path)?, &path.display().to_string())
}

fn parse_records<T: for<'de> Deserialize<'de>>(text: &str, file: &str, header: &[&str]) -> Result<Vec<T>, NetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| NetError::Parse {
            file: file.into(),
            row: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    if got != header {
        return Err(NetError::Parse {
            file: file.into(),
            row: 1,
            message: format!("expected header {}, found {}", header.join(","), got.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let rec: T = rec.map_err(|e| NetError::Parse {
            file: file.into(),
            row: e.position().map_or(0, |p| p.line()),
            message: match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            },
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Parses a weight table with header `j_hat,i,j,w`.
pub fn parse_weight_csv(text: &str, file: &str) -> Result<Vec<WeightRecord>, NetError> {
    parse_records(text, file, &["j_hat", "i", "j", "w"])
}

/// Parses a bias table with header `i,j,b`.
pub fn parse_bias_csv(text: &str, file: &str) -> Result<Vec<BiasRecord>, NetError> {
    parse_records(text, file, &["i", "j", "b"])
}

#[derive(Deserialize)]
struct LayerSidecar {
    layer_sizes: Vec<usize>,
}

/// Accepts either `{"layer_sizes": [1, 3, 10, 1]}` or a flat list such as
/// `1,3,10,1` / `1 3 10 1`.
pub fn parse_layer_sizes(text: &str, file: &str) -> Result<Vec<usize>, NetError> {
    let trimmed = text.trim();
    let sizes = if trimmed.starts_with('{') {
        serde_json::from_str::<LayerSidecar>(trimmed)
            .map_err(|e| NetError::Parse {
                file: file.into(),
                row: e.line() as u64,
                message: e.to_string(),
            })?
            .layer_sizes
    } else {
        trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>().map_err(|e| NetError::Parse {
                    file: file.into(),
                    row: 1,
                    message: format!("{t:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    check_layer_sizes(&sizes)?;
    Ok(sizes)
}
