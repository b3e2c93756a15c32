//! Minimal reverse-mode automatic differentiation for small convolutional
//! and recurrent networks on the CPU.
//!
//! Everything is generic over [`Scalar`] (`f32` for training, `f64` for
//! finite-difference checks) and single threaded, so identical inputs give
//! bit-identical outputs.

pub mod error;
pub mod gradcheck;
pub mod kernels;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod tape;
pub mod tensor;

pub use error::{Error, Result};
pub use optim::{Adam, Optimizer, Sgd};
pub use params::{Gradients, Init, ParamId, ParamStore};
pub use scalar::Scalar;
pub use tape::{Tape, Var};
pub use tensor::Tensor;

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Tape32 = Tape<f32>;
pub type Tape64 = Tape<f64>;
