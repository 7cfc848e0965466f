//! Tensor network functions: PEPS amplitudes, variational Monte Carlo,
//! Floquet entanglement dynamics and arithmetic circuits built from tensors.

pub mod circuit;
pub mod error;
pub mod floquet;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod peps;
pub mod scale;
pub mod svd;
pub mod tensor;
pub mod vmc;

pub use error::{Result, TnfError};
pub use scale::AmplitudeValue;
pub use tensor::{Tensor, C64};
