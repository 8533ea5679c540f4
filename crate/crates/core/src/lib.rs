//! Exact-arithmetic workbench for online Steiner Forest.
//!
//! The crate runs the greedy online algorithm under three metric contraction
//! rules, computes exact offline optima on small instances, and builds and
//! checks dual-ball certificates, balanced dual solutions and the instance
//! transformations used in the analysis of greedy.
//!
//! Everything is generic over [`Scalar`]; the aliases below fix the exact
//! big-rational instantiation used by the CLI and the acceptance suite.

pub mod balanced;
pub mod dual;
pub mod error;
pub mod generators;
pub mod graph;
pub mod greedy;
pub mod instance;
pub mod opt;
pub mod scalar;
pub mod transforms;

pub use error::{Error, Result};
pub use scalar::{Extended, Scalar};

/// Exact nonnegative rational weight.
pub type Weight = num_rational::BigRational;
pub type Graph = graph::WeightedGraph<Weight>;
pub type ExactInstance = instance::Instance<Weight>;
pub type ExactTrace = greedy::RunTrace<Weight>;
pub type ExactSolution = opt::SteinerSolution<Weight>;
