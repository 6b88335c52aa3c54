//! Magnetic-Laplacian feature propagation for directed graphs, with a
//! decoupled linear predictor on top.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the file formats store.

mod binio;
pub mod dense;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod magnetic;
pub mod model;
pub mod oracle;
pub mod propagation;
pub mod scalar;
pub mod verify;

pub use dense::FeatureMatrix;
pub use error::{Error, Result};
pub use graph::{DirectedGraph, Item, Subset, TaskKind, TaskSplit};
pub use magnetic::{ComplexSparseMatrix, MagneticConfig, Q_MAX};
pub use model::{LinearModel, MetricsReport, TrainConfig, TrainReport};
pub use propagation::{AggregatedFeatures, Aggregation, ComplexFeatureSet, PropagationConfig};
pub use scalar::Scalar;

pub type Features = FeatureMatrix<f64>;
pub type MagneticOperator = ComplexSparseMatrix<f64>;
pub type Aggregated = AggregatedFeatures<f64>;
pub type Model = LinearModel<f64>;
