//! Logarithmic Jensen's gap of fading laws and the approximate-capacity
//! bounds it certifies for two-user fast-fading interference channels.

pub mod afscheme;
pub mod error;
pub mod fading;
pub mod mc;
pub mod regions;

pub use error::{Error, Result};
pub use fading::{ComplexGainSampler, FadingModel, PhaseLaw, Shape};
pub use mc::{EstimateResult, Execution, McConfig};
