//! Maximum likelihood thresholds (MLTs) of Gaussian models.
//!
//! The MLT of a model is the smallest sample-covariance rank at which the
//! Gaussian maximum likelihood estimate exists for almost all data. This crate
//! bounds it combinatorially (clique number, treewidth), through the generic
//! rigidity matroid, in closed form for generic linear concentration and
//! directed structural equation models, and estimates it empirically by
//! Monte Carlo with two independent existence deciders.
//!
//! Module map:
//! - [`graph`]: graphs, digraphs, partitions, parsing and combinatorial invariants
//! - [`rigidity`]: rigidity matrices and exact generic rank
//! - [`models`]: linear subspaces of symmetric matrices for each model class
//! - [`solver`]: log-det MLE, completion feasibility, graphical lasso, SEM regression
//! - [`mlt`]: bounds, closed forms and the empirical estimator
//! - [`experiments`]: random-graph and graphical-lasso experiment harnesses

pub mod error;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod mlt;
pub mod models;
pub mod rigidity;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
pub use graph::{Digraph, EdgePartition, Graph, VertexPartition};
pub use models::{LinearSubspaceModel, ModelKind, SemModel};
