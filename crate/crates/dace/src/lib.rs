//! Data-aware covariance estimation from compressed data.
//!
//! Remote sites compress each data column independently by weighted
//! element-wise sampling (mixed ℓ1/ℓ2 probabilities), transmit compact
//! payloads, and a fusion center recovers an unbiased estimate of the
//! covariance matrix. The crate also ships the competing estimators it is
//! benchmarked against, synthetic dataset generators, a covariance-subspace
//! multiclass classifier, and a CSV benchmark harness behind the `dace` CLI.

pub mod baselines;
pub mod bench;
pub mod classifier;
pub mod data;
pub mod datagen;
pub mod fusion;
pub mod io;
pub mod linalg;
pub mod sampling;
pub mod seeding;
pub mod wire;

pub use data::DataMatrix;
pub use linalg::{Projector, SpectralDecomposition, SymmetricMatrix};
pub use sampling::{CompressedColumn, CompressionConfig};
pub use wire::SitePayload;
