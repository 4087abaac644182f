//! Data model and closed-form quantities of the piecewise-constant Gaussian
//! sequence model.

mod data;
mod posterior;
mod prior;

pub use data::{block_stats, fitted_vector, BlockConfig, BlockStat, BlockStats, SequenceData};
pub(crate) use data::ensure_same_len;
pub use posterior::{
    conditional_posterior_params, conditional_posterior_var, estimate_variance,
    log_marginal_from_stats, log_marginal_posterior_unnorm, resolve_sigma2, target_rate,
    NormalParams, Sigma2Source, TargetRate,
};
pub(crate) use posterior::{conditional_params_from_stats, score_from_parts};
pub use prior::{
    ln_binomial, log_block_size_prior, log_config_prior, log_sum_exp, Hyperparams,
    DEFAULT_ALPHA, DEFAULT_LAMBDA, DEFAULT_V,
};
