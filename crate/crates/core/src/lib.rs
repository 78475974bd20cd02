//! Workflow generation and optimization engine.
//!
//! The pipeline turns a weighted Work Knowledge Graph (WKG) and an encoded
//! client intention into candidate workflows, assembles those into a single
//! Workflow Graph (WFG), extracts the minimum-cost task path, and scores
//! generated workflows against references with a five-metric suite.
//!
//! Modules follow the pipeline order:
//!
//! - [`providers`] — pluggable embedding / generation / judging backends,
//!   each with a deterministic offline implementation
//! - [`wkg`] — the Work Knowledge Graph store and its edge-weight model
//! - [`intention`] — multi-modal preprocessing and intention encoding
//! - [`retrieval`] — similarity routing, neighborhood splits, and
//!   Steiner-style sub-graph extraction
//! - [`generation`] — prompt construction, sequence parsing, DAG conversion
//! - [`assembly`] — workflow-graph union, cross-linking, and enhancement
//! - [`optimizer`] — per-task cost modeling and minimum-cost path search
//! - [`evaluation`] — exclusive matching, the five metrics, and the
//!   pentagon-area ranking

pub mod assembly;
pub mod error;
pub mod evaluation;
pub mod generation;
pub mod intention;
pub mod optimizer;
pub mod providers;
pub mod retrieval;
pub mod wkg;

pub use error::{Error, Result};
pub use providers::EmbeddingVector;
