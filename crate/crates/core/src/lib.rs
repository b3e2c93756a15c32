//! Multi-task pretext pretraining for chart vision encoders, with corpus
//! tooling for semantically tagged alt text and level-split evaluation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the command-line tool.

pub mod colorspace;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod fsutil;
pub mod losses;
pub mod models;
pub mod pretext;
pub mod raster;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use pretext_forge_autograd::Scalar;

/// Default working precision.
pub type Real = f32;
pub type Model = models::ChartModel<Real>;
pub type Model64 = models::ChartModel<f64>;
pub type Sample = pretext::PretextSample<Real>;
pub type Gray = colorspace::GrayImage<Real>;
pub type Ab = colorspace::AbImage<Real>;
