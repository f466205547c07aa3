//! Structure learning for Bayesian networks from incomplete data.
//!
//! Scores candidate structures with node-average likelihood terms computed
//! on locally-complete rows, searches over DAGs exactly (given a node
//! ordering) or heuristically (tabu search), and ships a structural-EM
//! baseline for comparison. Covers discrete, Gaussian and conditional
//! linear Gaussian networks.

pub mod bundled;
pub mod data;
pub mod graph;
pub mod io;
pub mod model;
pub mod scoring;
pub mod search;
pub mod sem;

pub use data::{Dataset, Schema, Value};
pub use graph::{ArcOp, Cpdag, Dag, Mutation};
pub use model::{BayesianNetwork, LocalDistribution, NodeType};
pub use scoring::{Penalty, ScoredSearchState};
pub use search::{SearchResult, TabuConfig};

/// Derives an independent stream seed from a base seed and a path of
/// indices (splitmix64 steps), so nested experiment loops stay reproducible
/// without sharing generator state.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = base;
    for &part in path {
        state = splitmix64(state ^ splitmix64(part.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
