//! Attention Transport Distance (ATD) toolkit.
//!
//! Cross-attention dumps captured from multilingual translation models are
//! reduced to per-layer source-token distributions, compared with exact 1-D
//! optimal transport, and averaged into a language distance matrix. The
//! matrix is then turned into a Neighbor-Joining tree, cut into depth-based
//! clusters, and used for controlled word-order comparisons.
//!
//! Modules follow the pipeline order:
//!
//! - [`ingest`]: ADIST v1 dumps, marginalization and head consensus
//! - [`transport`]: W2, Cramér and debiased Sinkhorn distances on a token grid
//! - [`matrix`]: pairwise aggregation into a [`matrix::DistanceMatrix`]
//! - [`phylo`]: Neighbor-Joining, patristic distances, cophenetic fidelity, Newick
//! - [`clustering`]: rooting, depth cuts and bisection for a target cluster count
//! - [`stats`]: Mann-Whitney U, Cohen's d and word-order group comparisons
//! - [`report`]: exporters and run manifests

pub mod clustering;
pub mod error;
pub mod ingest;
pub mod matrix;
pub mod phylo;
pub mod report;
pub mod stats;
pub mod transport;

pub use error::{AtdError, Result};
