//! Finite-scale constructions for ultrametric skeletons of metric spaces.
//!
//! The crate extracts well-structured subsequences from a metric space (an
//! unbounded growth chain, a near-equilateral set, or a chain converging to a
//! limit point), builds explicit embeddings of them into sup-product
//! ultrametrics, verifies the achieved distortion exactly, and realizes the
//! resulting ultrametrics in Euclidean space. Small instances can be checked
//! against brute-force oracles.

pub mod builder;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod extractor;
pub mod hilbert;
pub mod metric;
pub mod oracle;

pub use error::{Error, Result};
