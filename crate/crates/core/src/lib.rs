//! Diffusion maps and eigenvector localization for weighted spatial
//! interaction networks.
//!
//! The numeric core is generic over [`Scalar`] (`f32`, `f64`); graph
//! aggregation and cuts also accept exact weights such as integers and
//! rationals through [`Weight`]. The aliases at the crate root fix the
//! scalar to `f64`.

pub mod cluster;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod histogram;
pub mod io;
pub mod kernel;
pub mod localization;
pub mod pipeline;
pub mod scalar;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::{Scalar, Weight};

pub type Graph = graph::WeightedGraph<f64>;
pub type Interaction = graph::RawInteraction<f64>;
pub type Node = graph::NodeMeta<f64>;
pub type Eigen = spectral::EigenSystem<f64>;
pub type Embedding = diffusion::DiffusionEmbedding<f64>;
pub type Report = localization::LocalizationReport<f64>;
pub type Collapse = cluster::CollapseMatrix<f64>;

pub type Graph32 = graph::WeightedGraph<f32>;
pub type Eigen32 = spectral::EigenSystem<f32>;
