//! Point estimates, marginal credible intervals, the block-count posterior
//! and error metrics against a known truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fitted_vector, target_rate, BlockConfig, SequenceData};
use crate::sampler::{AcceptanceCounts, MoveKind, PosteriorSamples, PrefixSums};

/// Fewer retained draws than this make interval endpoints unreliable.
pub const MIN_INTERVAL_DRAWS: usize = 100;

fn ensure_draws(samples: &PosteriorSamples) -> Result<()> {
    if samples.num_draws() == 0 {
        return Err(Error::State("no retained draws".into()));
    }
    Ok(())
}

/// Coordinate-wise average of the sampled fitted vectors.
pub fn posterior_mean(samples: &PosteriorSamples) -> Result<Vec<f64>> {
    ensure_draws(samples)?;
    let mut acc = vec![0.0; samples.n];
    for d in samples.draws() {
        for (a, f) in acc.iter_mut().zip(fitted_vector(&d.config, &d.theta)?) {
            *a += f;
        }
    }
    let k = samples.num_draws() as f64;
    Ok(acc.into_iter().map(|a| a / k).collect())
}

/// Average of `fitted_vector(B, block means)` over the sampled configurations.
pub fn posterior_mean_rao_blackwell(samples: &PosteriorSamples, data: &SequenceData) -> Result<Vec<f64>> {
    ensure_draws(samples)?;
    if data.len() != samples.n {
        return Err(Error::config("data length does not match samples"));
    }
    let sums = PrefixSums::new(data.y());
    let mut acc = vec![0.0; samples.n];
    for d in samples.draws() {
        for r in d.config.blocks() {
            let mean = sums.block(r.start, r.end).mean;
            for a in &mut acc[r] {
                *a += mean;
            }
        }
    }
    let k = samples.num_draws() as f64;
    Ok(acc.into_iter().map(|a| a / k).collect())
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (position `(len - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed marginal intervals for every coordinate at `level`.
pub fn credible_intervals(samples: &PosteriorSamples, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("credible level must lie in (0, 1), got {level}")));
    }
    ensure_draws(samples)?;
    let k = samples.num_draws();
    if k < MIN_INTERVAL_DRAWS {
        log::warn!("only {k} retained draws; credible interval endpoints are unreliable");
    }
    let tail = (1.0 - level) / 2.0;
    // column-major so each coordinate's draws are contiguous
    let mut columns = vec![0.0; samples.n * k];
    for (j, d) in samples.draws().enumerate() {
        for (s, r) in d.config.blocks().into_iter().enumerate() {
            for i in r {
                columns[i * k + j] = d.theta[s];
            }
        }
    }
    Ok(columns
        .chunks_mut(k)
        .map(|col| {
            col.sort_by(f64::total_cmp);
            (quantile_sorted(col, tail), quantile_sorted(col, 1.0 - tail))
        })
        .collect())
}

/// Relative frequency of each block count among retained draws.
pub fn block_size_distribution(samples: &PosteriorSamples) -> Result<BTreeMap<usize, f64>> {
    ensure_draws(samples)?;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for d in samples.draws() {
        *counts.entry(d.config.num_blocks()).or_insert(0) += 1;
    }
    let k = samples.num_draws() as f64;
    Ok(counts.into_iter().map(|(b, c)| (b, c as f64 / k)).collect())
}

/// Empirical distribution over whole configurations.
pub fn config_frequencies(samples: &PosteriorSamples) -> BTreeMap<BlockConfig, f64> {
    let mut counts: BTreeMap<BlockConfig, usize> = BTreeMap::new();
    for d in samples.draws() {
        *counts.entry(d.config.clone()).or_insert(0) += 1;
    }
    let k = samples.num_draws() as f64;
    counts.into_iter().map(|(c, n)| (c, n as f64 / k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub posterior_mean: Vec<f64>,
    pub level: f64,
    pub intervals: Vec<(f64, f64)>,
    pub block_size_pmf: BTreeMap<usize, f64>,
    pub acceptance: AcceptanceCounts,
}

impl Summary {
    pub fn from_samples(samples: &PosteriorSamples, level: f64) -> Result<Self> {
        Ok(Self {
            posterior_mean: posterior_mean(samples)?,
            level,
            intervals: credible_intervals(samples, level)?,
            block_size_pmf: block_size_distribution(samples)?,
            acceptance: samples.acceptance(),
        })
    }

    /// Acceptance rate per move kind keyed by name; unproposed kinds omitted.
    pub fn acceptance_rates(&self) -> BTreeMap<&'static str, f64> {
        MoveKind::ALL
            .iter()
            .filter_map(|k| self.acceptance.rate(*k).map(|r| (k.name(), r)))
            .collect()
    }

    /// Most probable block count (smallest on ties).
    pub fn block_size_mode(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (&b, &p) in &self.block_size_pmf {
            if p > best.1 {
                best = (b, p);
            }
        }
        best.0
    }
}

/// Accuracy of a posterior summary against the true mean vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `||theta_hat - theta*||^2`.
    pub sq_error: f64,
    /// `sq_error / epsilon_n(theta*)`.
    pub normalized_risk: f64,
    pub target_rate: f64,
    pub true_blocks: usize,
    /// Fraction of coordinates whose truth lies in `[lo, hi]`.
    pub coverage: f64,
    pub mean_interval_width: f64,
    /// Posterior mass on `|B| > 2 |B*|`.
    pub complexity_exceedance: f64,
}

/// Multiplier `C` in the complexity exceedance `P(|B| > C |B*|)`.
pub const COMPLEXITY_FACTOR: usize = 2;

pub fn evaluate(truth: &[f64], summary: &Summary) -> Result<Metrics> {
    let n = summary.posterior_mean.len();
    if truth.len() != n {
        return Err(Error::config(format!(
            "truth has length {} but the summary has {n}",
            truth.len()
        )));
    }
    let true_blocks = BlockConfig::of_vector(truth)?.num_blocks();
    let rate = target_rate(true_blocks, n)?.epsilon_n;
    let sq_error: f64 = truth
        .iter()
        .zip(&summary.posterior_mean)
        .map(|(t, m)| (t - m) * (t - m))
        .sum();
    let covered = truth
        .iter()
        .zip(&summary.intervals)
        .filter(|(t, (lo, hi))| lo <= *t && *t <= hi)
        .count();
    let width: f64 = summary.intervals.iter().map(|(lo, hi)| hi - lo).sum();
    let complexity_exceedance = summary
        .block_size_pmf
        .range(COMPLEXITY_FACTOR * true_blocks + 1..)
        .fold(0.0, |acc, (_, p)| acc + p);
    Ok(Metrics {
        sq_error,
        normalized_risk: sq_error / rate,
        target_rate: rate,
        true_blocks,
        coverage: covered as f64 / n as f64,
        mean_interval_width: width / n as f64,
        complexity_exceedance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Hyperparams;
    use crate::sampler::{ChainSamples, Draw, SamplerConfig};

    fn samples(draws: Vec<(Vec<usize>, Vec<f64>)>, n: usize) -> PosteriorSamples {
        PosteriorSamples {
            n,
            seed: 0,
            hyperparams: Hyperparams::with_defaults(1.0).unwrap(),
            sampler: SamplerConfig::default(),
            chains: vec![ChainSamples {
                chain: 0,
                seed: 0,
                draws: draws
                    .into_iter()
                    .enumerate()
                    .map(|(i, (cps, theta))| Draw {
                        iteration: i,
                        config: BlockConfig::new(n, cps).unwrap(),
                        theta,
                    })
                    .collect(),
                acceptance: AcceptanceCounts::default(),
            }],
        }
    }

    #[test]
    fn single_draw_mean_is_its_fit() {
        let s = samples(vec![(vec![2], vec![1.0, -1.0])], 4);
        assert_eq!(posterior_mean(&s).unwrap(), vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn empty_samples_are_a_state_error() {
        let s = samples(vec![], 3);
        assert!(matches!(posterior_mean(&s), Err(Error::State(_))));
        assert!(matches!(block_size_distribution(&s), Err(Error::State(_))));
    }

    #[test]
    fn identical_draws_give_zero_width() {
        let s = samples(vec![(vec![1], vec![0.5, 2.0]); 10], 3);
        let iv = credible_intervals(&s, 0.95).unwrap();
        assert_eq!(iv, vec![(0.5, 0.5), (2.0, 2.0), (2.0, 2.0)]);
    }

    #[test]
    fn invalid_level() {
        let s = samples(vec![(vec![], vec![0.0])], 2);
        assert!(matches!(credible_intervals(&s, 1.0), Err(Error::Domain(_))));
        assert!(matches!(credible_intervals(&s, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn interpolated_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert!((quantile_sorted(&v, 0.1) - 1.4).abs() < 1e-15);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn pmf_of_n1() {
        let s = samples(vec![(vec![], vec![0.1]), (vec![], vec![0.2])], 1);
        assert_eq!(block_size_distribution(&s).unwrap(), BTreeMap::from([(1, 1.0)]));
    }

    #[test]
    fn perfect_estimate_metrics() {
        let truth = vec![1.0, 1.0, 3.0, 3.0];
        let summary = Summary {
            posterior_mean: truth.clone(),
            level: 0.95,
            intervals: truth.iter().map(|t| (t - 0.1, t + 0.1)).collect(),
            block_size_pmf: BTreeMap::from([(2, 0.9), (5, 0.1)]),
            acceptance: AcceptanceCounts::default(),
        };
        let m = evaluate(&truth, &summary).unwrap();
        assert_eq!(m.sq_error, 0.0);
        assert_eq!(m.coverage, 1.0);
        assert_eq!(m.true_blocks, 2);
        assert!((m.mean_interval_width - 0.2).abs() < 1e-12);
        assert!((m.complexity_exceedance - 0.1).abs() < 1e-15);
        assert!(evaluate(&truth[..3], &summary).is_err());
    }

    #[test]
    fn rao_blackwell_uses_block_means() {
        let d = SequenceData::new(vec![1.0, 3.0, 5.0], None).unwrap();
        let s = samples(vec![(vec![2], vec![100.0, -100.0])], 3);
        assert_eq!(posterior_mean_rao_blackwell(&s, &d).unwrap(), vec![2.0, 2.0, 5.0]);
    }
}
