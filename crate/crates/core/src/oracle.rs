//! Ground truth for short sequences: exhaustive enumeration of the
//! configuration posterior and Monte Carlo integration of the marginal.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    block_stats, ensure_same_len, fitted_vector, log_marginal_posterior_unnorm, log_sum_exp,
    BlockConfig, Hyperparams, SequenceData,
};

/// Largest `n` accepted by the enumerator (`2^19` configurations).
pub const MAX_ENUMERATION_N: usize = 20;

/// Normalized posterior over all `2^(n-1)` configurations, in mask order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPosterior {
    pub n: usize,
    pub configs: Vec<BlockConfig>,
    pub log_weights: Vec<f64>,
}

impl ExactPosterior {
    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_weights.iter().map(|w| w.exp())
    }

    /// Posterior of `|B|`, indexed by block count.
    pub fn block_size_pmf(&self) -> BTreeMap<usize, f64> {
        let mut pmf = BTreeMap::new();
        for (c, p) in self.configs.iter().zip(self.probs()) {
            *pmf.entry(c.num_blocks()).or_insert(0.0) += p;
        }
        pmf
    }

    /// Probability of a given configuration (mask lookup).
    pub fn prob_of(&self, config: &BlockConfig) -> f64 {
        let mask = config
            .changepoints()
            .iter()
            .fold(0usize, |m, &j| m | 1 << (j - 1));
        self.log_weights[mask].exp()
    }
}

fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_N {
        return Err(Error::Capacity {
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    Ok(())
}

/// Scores every configuration with the closed form and normalizes with
/// log-sum-exp. Configuration `i` has change points at the set bits of `i`.
pub fn enumerate_exact_posterior(data: &SequenceData, hp: &Hyperparams) -> Result<ExactPosterior> {
    let n = data.len();
    check_capacity(n)?;
    hp.validate()?;
    let count = 1u64 << (n - 1);
    let configs: Vec<BlockConfig> = (0..count)
        .map(|mask| BlockConfig::from_mask(n, mask))
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = configs
        .par_iter()
        .map(|c| log_marginal_posterior_unnorm(c, data, hp))
        .collect::<Result<_>>()?;
    let log_norm = log_sum_exp(&scores);
    Ok(ExactPosterior {
        n,
        configs,
        log_weights: scores.into_iter().map(|s| s - log_norm).collect(),
    })
}

/// `sum_B P(B) * fitted_vector(B, block means of B)`.
///
/// Exact because the conditional posterior mean of each block is its average.
pub fn exact_posterior_mean(data: &SequenceData, hp: &Hyperparams) -> Result<Vec<f64>> {
    let post = enumerate_exact_posterior(data, hp)?;
    exact_mean_from(&post, data)
}

pub fn exact_mean_from(post: &ExactPosterior, data: &SequenceData) -> Result<Vec<f64>> {
    let mut mean = vec![0.0; post.n];
    for (c, p) in post.configs.iter().zip(post.probs()) {
        let fit = fitted_vector(c, &block_stats(data, c)?.means())?;
        for (m, f) in mean.iter_mut().zip(fit) {
            *m += p * f;
        }
    }
    Ok(mean)
}

/// Monte Carlo estimate of `log E[L_n(theta_B^+)^alpha]` with `theta_B`
/// drawn from the data-centred prior, and its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Integrates the fractional likelihood against the conditional prior by
/// sampling. `L_n` is taken without its normalizing constant, so the result
/// is directly comparable with the closed-form score minus `log pi_n(B)`.
pub fn mc_log_marginal<R: Rng + ?Sized>(
    config: &BlockConfig,
    data: &SequenceData,
    hp: &Hyperparams,
    draws: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    ensure_same_len(data, config)?;
    hp.validate()?;
    if draws < 1000 {
        return Err(Error::config(format!("at least 1000 draws required, got {draws}")));
    }
    let y = data.y();
    let blocks = config.blocks();
    let centres: Vec<f64> = blocks
        .iter()
        .map(|r| y[r.clone()].iter().sum::<f64>() / r.len() as f64)
        .collect();
    let scale = hp.alpha / (2.0 * hp.sigma2);

    let mut log_w = Vec::with_capacity(draws);
    for _ in 0..draws {
        let mut ss = 0.0;
        for (r, &centre) in blocks.iter().zip(&centres) {
            let sd = (hp.v / r.len() as f64).sqrt();
            let z: f64 = rng.sample(StandardNormal);
            let theta = centre + sd * z;
            ss += y[r.clone()].iter().map(|v| (v - theta) * (v - theta)).sum::<f64>();
        }
        log_w.push(-scale * ss);
    }

    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let k = draws as f64;
    let mean = w.iter().sum::<f64>() / k;
    let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    Ok(McEstimate {
        estimate: max + mean.ln(),
        std_error: (var / k).sqrt() / mean,
    })
}
