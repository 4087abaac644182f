//! Closed-form posterior quantities.
//!
//! With the block means integrated out against the data-centred normal
//! prior, a configuration `B` has unnormalized log posterior
//!
//! ```text
//! log pi_n(B) - alpha / (2 sigma2) * RSS(B) - |B| / 2 * log(1 + v alpha / sigma2)
//! ```
//!
//! and, given `B`, the block means are independent normals centred on the
//! block averages.

use serde::{Deserialize, Serialize};

use super::data::{block_stats, BlockStats};
use super::prior::{log_config_prior_by_size, Hyperparams};
use super::{BlockConfig, SequenceData};
use crate::error::{Error, Result};

/// Log posterior score assembled from the pieces that vary with `B`.
pub(crate) fn score_from_parts(b: usize, n: usize, rss: f64, hp: &Hyperparams) -> f64 {
    let log_prior = log_config_prior_by_size(b, n, hp.lambda)
        .expect("block count validated by BlockConfig");
    log_prior - hp.alpha / (2.0 * hp.sigma2) * rss - 0.5 * b as f64 * log_shrink_factor(hp)
}

/// `log(1 + v alpha / sigma2)`, the per-block price of integrating out a mean.
pub(crate) fn log_shrink_factor(hp: &Hyperparams) -> f64 {
    (hp.v * hp.alpha / hp.sigma2).ln_1p()
}

/// Unnormalized log marginal posterior of `config`, given precomputed stats.
pub fn log_marginal_from_stats(
    config: &BlockConfig,
    stats: &BlockStats,
    hp: &Hyperparams,
) -> Result<f64> {
    hp.validate()?;
    if stats.len() != config.num_blocks() {
        return Err(Error::config("block stats do not match configuration"));
    }
    Ok(score_from_parts(config.num_blocks(), config.n(), stats.total_rss(), hp))
}

/// Unnormalized log marginal posterior of `config`, computed from scratch.
pub fn log_marginal_posterior_unnorm(
    config: &BlockConfig,
    data: &SequenceData,
    hp: &Hyperparams,
) -> Result<f64> {
    hp.validate()?;
    let stats = block_stats(data, config)?;
    log_marginal_from_stats(config, &stats, hp)
}

/// Mean and variance of a block mean's conditional posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub var: f64,
}

/// Conditional posterior variance of a block of `size` observations.
///
/// Prior precision `size / v` plus fractional-likelihood precision
/// `alpha * size / sigma2`.
pub fn conditional_posterior_var(size: usize, hp: &Hyperparams) -> f64 {
    hp.sigma2 * hp.v / (size as f64 * (hp.alpha * hp.v + hp.sigma2))
}

/// Per-block conditional posterior of `theta_B` given `B`.
pub fn conditional_posterior_params(
    config: &BlockConfig,
    data: &SequenceData,
    hp: &Hyperparams,
) -> Result<Vec<NormalParams>> {
    hp.validate()?;
    let stats = block_stats(data, config)?;
    Ok(conditional_params_from_stats(&stats, hp))
}

pub(crate) fn conditional_params_from_stats(stats: &BlockStats, hp: &Hyperparams) -> Vec<NormalParams> {
    stats
        .blocks
        .iter()
        .map(|b| NormalParams {
            mean: b.mean,
            var: conditional_posterior_var(b.size, hp),
        })
        .collect()
}

/// First-difference plug-in estimate of the noise variance,
/// `sum (y[i+1] - y[i])^2 / (2 (n - 1))`.
pub fn estimate_variance(data: &SequenceData) -> Result<f64> {
    let y = data.y();
    if y.len() < 2 {
        return Err(Error::domain("variance estimate needs at least two observations"));
    }
    let ss: f64 = y.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    Ok(ss / (2.0 * (y.len() - 1) as f64))
}

/// Where the working noise variance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma2Source {
    /// Supplied explicitly by the caller.
    Fixed,
    /// Carried by the data (e.g. simulated with known noise).
    Known,
    /// First-difference plug-in estimate.
    Estimate,
}

impl Sigma2Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sigma2Source::Fixed => "fixed",
            Sigma2Source::Known => "known",
            Sigma2Source::Estimate => "estimate",
        }
    }
}

/// Uses the data's own variance when present, the plug-in estimate otherwise.
pub fn resolve_sigma2(data: &SequenceData) -> Result<(f64, Sigma2Source)> {
    match data.sigma2() {
        Some(s2) => Ok((s2, Sigma2Source::Known)),
        None => {
            let s2 = estimate_variance(data)?;
            if s2 <= 0.0 {
                return Err(Error::domain(
                    "plug-in variance estimate is zero (constant sequence)",
                ));
            }
            Ok((s2, Sigma2Source::Estimate))
        }
    }
}

/// Minimax squared-error scale for a truth with `b_star` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRate {
    pub b_star: usize,
    pub n: usize,
    pub epsilon_n: f64,
}

/// `1` for a single block, `b* log(e n / b*)` otherwise (natural log).
pub fn target_rate(b_star: usize, n: usize) -> Result<TargetRate> {
    if b_star == 0 || b_star > n {
        return Err(Error::domain(format!("true block count {b_star} outside 1..={n}")));
    }
    let epsilon_n = if b_star == 1 {
        1.0
    } else {
        let b = b_star as f64;
        b * (1.0 + (n as f64 / b).ln())
    };
    Ok(TargetRate {
        b_star,
        n,
        epsilon_n,
    })
}
