//! Empirical Bayes inference for the piecewise-constant Gaussian sequence
//! model `Y_i ~ N(theta_i, sigma^2)`, where `theta` is constant on the blocks
//! of an unknown partition of `{1, ..., n}` into consecutive runs.
//!
//! The block means are given a normal prior centred on the block averages,
//! the likelihood enters raised to a power `alpha < 1`, and the block
//! configuration gets a prior that decays geometrically in the number of
//! blocks. The means then integrate out in closed form, which leaves a
//! discrete posterior over configurations. [`sampler`] explores it by
//! Metropolis-Hastings, [`oracle`] enumerates it exactly for short sequences
//! and [`summaries`] turns draws into point estimates and credible intervals.

pub mod error;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod summaries;

pub use error::{Error, Result};
pub use model::{BlockConfig, Hyperparams, SequenceData};
