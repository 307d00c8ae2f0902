//! Monte Carlo estimation of nodal-domain statistics for stationary Gaussian
//! fields: sampling, domain labeling, nesting trees and the estimators built
//! on them.

pub mod ensembles;
pub mod error;
pub mod fft;
pub mod harness;
pub mod lemmas;
pub mod nodal;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod union_find;

pub use error::{Error, Result};
