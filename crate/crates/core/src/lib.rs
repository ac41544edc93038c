//! Global value networks and value trees from multi-regional input-output
//! tables.
//!
//! The pipeline: load (or synthesize) an MRIO table bundle, derive the
//! technical coefficients and Leontief inverse, scale by value-added shares
//! into the contribution matrix, build the global value network, extract
//! threshold/depth-bounded value trees, and compute tree statistics,
//! allometric scaling fits, the tree-based importance measure and the
//! centrality baselines it is compared against.
//!
//! ```
//! use std::collections::BTreeSet;
//! use gvtree::{bundle, mrio, network, tree};
//!
//! let table = bundle::synth_mrio(&bundle::SynthSpec {
//!     n_countries: 2,
//!     n_industries: 3,
//!     target_spectral_radius: 0.6,
//!     domestic_bias: 0.5,
//!     seed: 1,
//! })
//! .unwrap();
//! let coeff = mrio::technical_coefficients(&table).unwrap();
//! let leontief = mrio::leontief_inverse(&coeff).unwrap();
//! let shares = mrio::value_added_shares(&table).unwrap();
//! let g = mrio::contribution_matrix(&shares, &leontief).unwrap();
//! let net = network::build_network(&g, &table.sectors, table.year, &BTreeSet::new()).unwrap();
//! let forest = tree::extract_forest(&net, 0.01, 3).unwrap();
//! assert!(!forest.is_empty());
//! ```

pub mod bundle;
pub mod error;
pub mod export;
pub mod importance;
pub mod mrio;
pub mod network;
pub mod tree;

mod par;
mod stats;

#[cfg(test)]
pub(crate) mod fixtures;

pub use error::{Error, Result};

/// Benchmark defaults for tree extraction.
pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_GAMMA: u32 = 3;

/// PageRank defaults.
pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_PAGERANK_TOL: f64 = 1e-12;
pub const DEFAULT_PAGERANK_MAX_ITER: usize = 1000;

/// Country code of the rest-of-world aggregate, dropped from networks.
pub const REST_OF_WORLD: &str = "RoW";
