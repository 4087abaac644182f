//! Priors on the block count and on block configurations.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::BlockConfig;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.99;
pub const DEFAULT_V: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Tuning constants of the empirical Bayes posterior plus the working noise
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Power applied to the likelihood, in (0, 1).
    pub alpha: f64,
    /// Prior variance scale for a block mean; block `s` gets `v / |B(s)|`.
    pub v: f64,
    /// Exponent of the `n^{-lambda (b - 1)}` complexity penalty.
    pub lambda: f64,
    pub sigma2: f64,
}

impl Hyperparams {
    pub fn new(alpha: f64, v: f64, lambda: f64, sigma2: f64) -> Result<Self> {
        let hp = Self {
            alpha,
            v,
            lambda,
            sigma2,
        };
        hp.validate()?;
        Ok(hp)
    }

    /// `alpha = 0.99`, `v = 1`, `lambda = 1` with the given noise variance.
    pub fn with_defaults(sigma2: f64) -> Result<Self> {
        Self::new(DEFAULT_ALPHA, DEFAULT_V, DEFAULT_LAMBDA, sigma2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        for (name, x) in [("v", self.v), ("lambda", self.lambda), ("sigma2", self.sigma2)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

/// Natural log of the binomial coefficient via log-gamma.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "ln_binomial: k = {k} > n = {n}");
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Log normalizer of the truncated geometric `sum_{k=0}^{n-1} p^k`,
/// `p = n^{-lambda}`.
fn ln_geometric_normalizer(n: usize, lambda: f64) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let ln_p = -lambda * (n as f64).ln();
    // (1 - p^n) / (1 - p)
    (-(n as f64 * ln_p).exp_m1()).ln() - (-ln_p.exp_m1()).ln()
}

/// `log f_n(b)` for the block-count prior `f_n(b) ∝ n^{-lambda (b - 1)}`,
/// `b = 1, ..., n`.
pub fn log_block_size_prior(b: usize, n: usize, lambda: f64) -> Result<f64> {
    if n == 0 || b == 0 || b > n {
        return Err(Error::domain(format!("block count {b} outside 1..={n}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(-lambda * (b - 1) as f64 * (n as f64).ln() - ln_geometric_normalizer(n, lambda))
}

/// `log pi_n(B) = log f_n(|B|) - log C(n - 1, |B| - 1)`.
pub fn log_config_prior(config: &BlockConfig, lambda: f64) -> Result<f64> {
    log_config_prior_by_size(config.num_blocks(), config.n(), lambda)
}

pub(crate) fn log_config_prior_by_size(b: usize, n: usize, lambda: f64) -> Result<f64> {
    Ok(log_block_size_prior(b, n, lambda)? - ln_binomial(n - 1, b - 1))
}

/// Numerically stable `log(sum(exp(xs)))`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
