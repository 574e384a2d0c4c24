//! Sampling-based extremal bounds for multivariate trigonometric polynomials,
//! with applications to Toeplitz spectra and 2-D filter bank design.

pub mod bounds;
pub mod error;
pub mod fft;
pub mod filterbank;
pub mod io;
pub mod kernel;
pub mod poly;
mod serde_float;
pub mod toeplitz;

pub use bounds::{
    bound_constant, certify_positive, cnd_sharp, cnd_simple, lower_bound_real, upper_bound_complex,
    upper_bound_real, BoundConstant, BoundReport, PriorBound,
};
pub use error::{Error, Result};
pub use filterbank::{
    certify_pr, degree_bound, design, design_with_synthesis, min_norm_synthesis, DesignSpec,
    FilterBank, SynthesisBank,
};
pub use kernel::Kernel;
pub use poly::{GridStats, SampleGrid, TrigPoly};
pub use toeplitz::{eigen_range, EigenRange, ToeplitzSpec};
