//! COSMO: constraint-free acyclic structure learning.
//!
//! Fits a weighted DAG to observational data by jointly optimizing a direct
//! adjacency matrix `H` and a node-priority vector `p`. The learned graph is
//! the elementwise product of `H` with a smooth orientation matrix — a
//! tempered sigmoid of pairwise priority differences — whose temperature is
//! annealed toward zero, so the result converges to a DAG without ever
//! evaluating an acyclicity constraint.
//!
//! The crate also ships the synthetic benchmark the method is usually
//! evaluated on (random DAGs plus linear or MLP structural equation models),
//! an unconstrained ReLU-orientation baseline, and structure-recovery
//! metrics (NHD, TPR/FPR, ROC AUC).
//!
//! All numeric code is generic over the [`scalar::Scalar`] floating-point
//! type; the aliases below fix `f64`, which is what the CLI uses.

pub mod dense;
pub mod error;
pub mod graph;
pub mod linear;
pub mod metrics;
pub mod nonlinear;
pub mod optim;
pub mod orientation;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};

/// `f64` instantiations of the core types.
pub type Mat64 = dense::Mat<f64>;
pub type WeightedAdjacency64 = graph::WeightedAdjacency<f64>;
pub type PriorityVector64 = orientation::PriorityVector<f64>;
pub type SmoothOrientation64 = orientation::SmoothOrientation<f64>;
pub type OrientationConfig64 = orientation::OrientationConfig<f64>;
pub type CosmoParams64 = linear::CosmoParams<f64>;
pub type NocurlUParams64 = linear::NocurlUParams<f64>;
pub type NonlinearParams64 = nonlinear::NonlinearParams<f64>;
pub type RegWeights64 = linear::RegWeights<f64>;
pub type Dataset64 = synth::Dataset<f64>;
pub type TrainConfig64 = optim::TrainConfig<f64>;
pub type AnnealSchedule64 = optim::AnnealSchedule<f64>;
