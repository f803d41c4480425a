//! Distribution regression on groups of irregularly sampled multivariate time
//! series, built on expected signatures.
//!
//! Two regressors are provided:
//!
//! * **SES**: the signature of the pathwise expected signature of each group,
//!   followed by Lasso regression ([`measures::ses_features`], [`regress::lasso`]).
//! * **KES**: kernel ridge regression with the Gaussian-type kernel
//!   `exp(-σ² ‖E S(μ) - E S(ν)‖²)`, where the distance is expanded into
//!   pairwise signature kernels solved by a Goursat PDE scheme
//!   ([`sigkernel`], [`regress::krr`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod linalg;
pub mod measures;
pub mod regress;
pub mod signature;
pub mod sigkernel;
pub mod streams;
pub mod tensor;

pub use error::{Error, Result};
pub use streams::{ChannelScaler, Dataset, EmpiricalMeasure, TimeSeries};
pub use tensor::{term_count, TruncatedTensor};
