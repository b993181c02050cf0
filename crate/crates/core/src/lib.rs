//! Conditionally iid multivariate laws: exact samplers, closed-form survival
//! functions and copulas, extendibility checks, and a Monte Carlo harness
//! that cross-validates each sampler against its closed form.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod extreme_value;
pub mod lack_of_memory;
pub mod mixtures;
pub mod moments;
pub mod numerics;
pub mod sampling;
pub mod shock_models;
mod serde_real;

pub use error::{Error, Result};
pub use sampling::{draw, draw_seeded, RowSampler, SampleMatrix};
