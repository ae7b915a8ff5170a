//! Sampling points on smooth varieties over Q_p by random linear slicing,
//! and Monte Carlo integration against the canonical measure.

pub mod error;
pub mod intersect;
pub mod linalg;
pub mod padic;
pub mod poly;
pub mod sampler;
pub mod stats;
pub mod variety;

pub use error::{Error, Result};
pub use padic::{PadicContext, PadicScalar, Valuation};
pub use sampler::{DensitySpec, IntegralEstimate, RunOptions, SampleBatch};
pub use variety::{Ambient, VarietySpec};
