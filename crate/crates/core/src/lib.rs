//! Embedding trained ReLU networks into linear and mixed-integer programs.
//!
//! Two encodings are provided: the big-M formulation with one binary per
//! hidden node, and a binary-free formulation that keeps only the
//! lower-bound rows and is exact whenever the host objective pushes the
//! network output down and all weights are non-negative. Models are solved
//! with the in-crate simplex and branch-and-bound solvers.

pub mod bench;
pub mod bnb;
pub mod embed;
pub mod knapsack;
pub mod model;
pub mod relu_net;
pub mod simplex;
pub mod verify;

pub use bnb::{solve_milp, MilpConfig, MilpError, MilpResult, MilpStatus};
pub use embed::{
    encode_classic, encode_relu_plus, propagate_bounds, BigM, EmbedError, EmbeddingHandle, Encoding, NodeBounds,
};
pub use knapsack::KnapsackInstance;
pub use model::{LinModel, Relation, Sense, VarId, VarKind};
pub use relu_net::{square_fixture, ReluNet};
pub use simplex::{solve_lp, LpStatus, SimplexResult};
