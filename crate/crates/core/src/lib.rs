//! Blowfish privacy policies, their database adjacency graphs, and
//! min-entropy leakage bounds driven by component diameters.
//!
//! A policy pairs a secret graph over tuple values with a set of
//! permissible databases. [`adjacency`] induces the graph on which a
//! mechanism must be smooth, [`channel`] measures privacy level and
//! leakage of a concrete mechanism, [`bounds`] evaluates the
//! diameter-based limits, and [`symmetrise`] implements the
//! transformations used to prove them. [`tightness`] builds a family
//! that attains the bound asymptotically.

pub mod adjacency;
pub mod bounds;
pub mod channel;
pub mod error;
pub mod graph;
pub mod group;
pub mod policy;
pub mod report;
pub mod symmetrise;
pub mod tightness;

pub use adjacency::{induce_adjacency_graph, AdjacencyGraph};
pub use bounds::{audit, BoundReport, ComponentProfile};
pub use channel::{leakage, leakage_uniform, minimal_epsilon, ChannelMatrix, Prior};
pub use error::{Error, Result};
pub use graph::Graph;
pub use group::{Permutation, PermutationGroup};
pub use policy::{BlowfishPolicy, Database, Permissible, SecretGraph, TupleUniverse};
pub use report::KeyValues;
