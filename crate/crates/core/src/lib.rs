//! Capon (MVDR) beamforming with beam-pattern shaping penalties.
//!
//! The crate provides a uniform-linear-array simulator, the closed-form
//! Capon beamformer and five shaped variants (sparse, weighted sparse,
//! mixed norm, total variation + sparse, relaxed mainlobe-to-sidelobe power
//! ratio), a constrained ADMM / quasi-Newton solver behind them, and the
//! evaluation tools used by the `beamshape` command line program.
//!
//! Numerical types are generic over the real scalar ([`Real`]); the aliases
//! below fix it to `f64`, which is what the benchmarks use.

pub mod array;
pub mod beamformers;
pub mod commands;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod output;
pub mod prox;
pub mod scalar;
pub mod solver;

pub use array::{ArrayGeometry, Scenario, SourceSpec};
pub use beamformers::{BeamformerKind, Method};
pub use error::{Error, Result};
pub use evaluation::{GridSpec, SinrReport};
pub use scalar::{Real, C};
pub use solver::{SolverOptions, SolverStatus};

pub type Complex64 = C<f64>;
pub type Matrix = linalg::CMat<f64>;
pub type Matrix32 = linalg::CMat<f32>;
pub type Manifold = array::ArrayManifold<f64>;
pub type Manifold32 = array::ArrayManifold<f32>;
pub type Split = array::ManifoldSplit<f64>;
pub type Covariance = array::CovarianceEstimate<f64>;
pub type Snapshots = array::SnapshotMatrix<f64>;
pub type Weights = beamformers::WeightVector<f64>;
pub type Weights32 = beamformers::WeightVector<f32>;
pub type Problem = solver::ProblemSpec<f64>;
pub type Options = SolverOptions<f64>;
pub type Solution = solver::SolverResult<f64>;
pub type Pattern = evaluation::BeamPattern<f64>;
