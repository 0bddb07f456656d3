//! Legal reasoning knowledge graph engine.
//!
//! Court judgments are parsed into segments ([`corpus`]), labeled into Fact, Provision,
//! LegalNorm and LegalApplication nodes ([`extraction`], [`normalize`]), linked into a
//! typed multigraph ([`linker`], [`graph`]) and queried fact-first: embed a fact, find
//! similar facts ([`index`]) and follow their reasoning paths to statutory provisions
//! ([`search`]). [`eval`] scores that retrieval against baselines.

pub mod corpus;
pub mod eval;
pub mod extraction;
pub mod graph;
pub mod index;
pub mod linker;
pub mod normalize;
pub mod parallel;
pub mod pipeline;
pub mod provider;
pub mod schema;
pub mod search;
pub mod scalar;
pub mod text;

pub use schema::{EdgeKind, NodeLabel, Provenance};
pub use scalar::Scalar;

/// Single-precision index, the default for serving.
pub type VectorIndexF32 = index::VectorIndex<f32>;
pub type VectorIndexF64 = index::VectorIndex<f64>;
pub type EmbeddingF32 = index::EmbeddingVector<f32>;
pub type EmbeddingF64 = index::EmbeddingVector<f64>;
