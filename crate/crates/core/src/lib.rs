//! Extended-precision solver for the time-fractional subdiffusion equation
//! `∂_t^α (u - v) - A u = g` with weakly singular sources `g = t^μ ∘ f`.
//!
//! The time discretisation smooths the source with an `m`-fold integral and
//! differentiates it back with the discrete BDF`k` operator (ID`m`-BDF`k`),
//! which restores `k`-th order convergence for singular sources.

pub mod cq_weights;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mp;
pub mod oracle;
pub mod source_smoothing;
pub mod spatial;
pub mod stepper;

pub use error::{Error, Result};
pub use mp::Precision;
