//! Dissolution-profile prediction from multi-channel tablet measurements.
//!
//! The pipeline standardizes each measurement channel (NIR and Raman spectra
//! in reflection and transmission mode, plus the compression force curve),
//! reduces it with PCA, and regresses the 53-point dissolution profile with a
//! ReLU multilayer perceptron trained by L-BFGS. Channel combinations are
//! ranked by the f2 similarity factor between measured and predicted profiles.
//!
//! Module map:
//!
//! - [`model`]: dataset schema, the dissolution time grid, validation and cleaning.
//! - [`ingest`]: manifest + CSV persistence.
//! - [`preprocess`]: column standardization and channel concatenation.
//! - [`pca`]: covariance eigen-decomposition, retention and projection.
//! - [`mlp`] and [`lbfgs`]: the regressor and its quasi-Newton optimizer.
//! - [`similarity`]: f1 / f2 dissolution metrics.
//! - [`experiment`]: splits, feature building, combination sweeps and reports.
//! - [`synth`]: seeded synthetic datasets with known latent structure.
//! - [`config`]: the key-value run configuration shared by the CLI.

pub mod config;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod kv;
pub mod lbfgs;
pub mod mlp;
pub mod model;
pub mod pca;
pub mod preprocess;
pub mod similarity;
pub mod synth;

mod seed;

pub use error::{Error, Result};
pub use model::{Dataset, MeasurementKind, SampleMeta, SpectralBlock, TimeGrid};
