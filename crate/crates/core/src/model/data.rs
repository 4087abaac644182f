use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation vector `y` with an optional known noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceData {
    y: Vec<f64>,
    sigma2: Option<f64>,
}

impl SequenceData {
    pub fn new(y: Vec<f64>, sigma2: Option<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::config("sequence must contain at least one observation"));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("observation {} is not finite", i + 1)));
        }
        if let Some(s2) = sigma2 {
            if !(s2.is_finite() && s2 > 0.0) {
                return Err(Error::domain(format!("noise variance must be positive, got {s2}")));
            }
        }
        Ok(Self { y, sigma2 })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn sigma2(&self) -> Option<f64> {
        self.sigma2
    }

    /// Returns a copy with every observation shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.y.iter().map(|v| v + c).collect(), self.sigma2)
    }
}

/// A partition of `{1, ..., n}` into consecutive blocks.
///
/// A change point at position `j` (1-based, `1 <= j <= n - 1`) splits the
/// sequence between observations `j` and `j + 1`. Read as a 0-based index,
/// `j` is also the exclusive end of the block to its left, so [`blocks`]
/// returns half-open 0-based ranges.
///
/// [`blocks`]: BlockConfig::blocks
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockConfig {
    n: usize,
    changepoints: Vec<usize>,
}

impl BlockConfig {
    pub fn new(n: usize, changepoints: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("sequence length must be at least 1"));
        }
        for w in changepoints.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::config(format!(
                    "change points must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&c) = changepoints.iter().find(|&&c| c == 0 || c >= n) {
            return Err(Error::config(format!(
                "change point {c} outside 1..={} for n = {n}",
                n - 1
            )));
        }
        Ok(Self { n, changepoints })
    }

    /// The one-block configuration.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    /// Every observation in its own block.
    pub fn saturated(n: usize) -> Result<Self> {
        Self::new(n, (1..n).collect())
    }

    /// Builds the configuration whose change points are the set bits of
    /// `mask`: bit `j - 1` set means a change point at `j`.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        if n == 0 || n > 64 || (n < 64 && mask >> (n - 1) != 0) {
            return Err(Error::config(format!("mask {mask:#x} does not fit n = {n}")));
        }
        let changepoints = (1..n).filter(|j| mask >> (j - 1) & 1 == 1).collect();
        Ok(Self { n, changepoints })
    }

    pub(crate) fn from_sorted_unchecked(n: usize, changepoints: Vec<usize>) -> Self {
        debug_assert!(Self::new(n, changepoints.clone()).is_ok());
        Self { n, changepoints }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn changepoints(&self) -> &[usize] {
        &self.changepoints
    }

    /// Number of blocks, `|B|`.
    pub fn num_blocks(&self) -> usize {
        self.changepoints.len() + 1
    }

    pub fn is_changepoint(&self, j: usize) -> bool {
        self.changepoints.binary_search(&j).is_ok()
    }

    /// Half-open 0-based index ranges of the blocks, in order.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        let mut out = Vec::with_capacity(self.num_blocks());
        let mut start = 0;
        for &c in &self.changepoints {
            out.push(start..c);
            start = c;
        }
        out.push(start..self.n);
        out
    }

    /// Index of the block holding 0-based observation `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.changepoints.partition_point(|&c| c <= i)
    }

    /// Block label for every observation.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = Vec::with_capacity(self.n);
        for (s, r) in self.blocks().into_iter().enumerate() {
            labels.extend(std::iter::repeat_n(s, r.len()));
        }
        labels
    }

    /// Configuration implied by a piecewise-constant vector: a change point
    /// wherever consecutive entries differ.
    pub fn of_vector(theta: &[f64]) -> Result<Self> {
        let cps = theta
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != w[1])
            .map(|(i, _)| i + 1)
            .collect();
        Self::new(theta.len(), cps)
    }
}

/// Sufficient statistics of one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStat {
    pub size: usize,
    pub mean: f64,
    pub rss: f64,
}

impl BlockStat {
    /// Two-pass mean and residual sum of squares over `values`.
    pub fn from_slice(values: &[f64]) -> Self {
        let size = values.len();
        let mean = values.iter().sum::<f64>() / size as f64;
        let rss = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Self { size, mean, rss }
    }
}

/// Per-block sufficient statistics for a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub blocks: Vec<BlockStat>,
}

impl BlockStats {
    pub fn total_rss(&self) -> f64 {
        self.blocks.iter().map(|b| b.rss).sum()
    }

    pub fn means(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.mean).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

fn check_len(data: &SequenceData, config: &BlockConfig) -> Result<()> {
    if data.len() != config.n() {
        return Err(Error::config(format!(
            "configuration has n = {} but data has {} observations",
            config.n(),
            data.len()
        )));
    }
    Ok(())
}

/// Block sizes, means and residual sums of squares computed from scratch.
pub fn block_stats(data: &SequenceData, config: &BlockConfig) -> Result<BlockStats> {
    check_len(data, config)?;
    let y = data.y();
    Ok(BlockStats {
        blocks: config
            .blocks()
            .into_iter()
            .map(|r| BlockStat::from_slice(&y[r]))
            .collect(),
    })
}

/// Expands per-block values to the length-`n` vector `theta_B^+`.
pub fn fitted_vector(config: &BlockConfig, theta_b: &[f64]) -> Result<Vec<f64>> {
    if theta_b.len() != config.num_blocks() {
        return Err(Error::config(format!(
            "expected {} block values, got {}",
            config.num_blocks(),
            theta_b.len()
        )));
    }
    let mut out = Vec::with_capacity(config.n());
    for (r, &v) in config.blocks().into_iter().zip(theta_b) {
        out.extend(std::iter::repeat_n(v, r.len()));
    }
    Ok(out)
}

pub(crate) fn ensure_same_len(data: &SequenceData, config: &BlockConfig) -> Result<()> {
    check_len(data, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, cps: &[usize]) -> BlockConfig {
        BlockConfig::new(n, cps.to_vec()).unwrap()
    }

    #[test]
    fn blocks_match_one_based_ranges() {
        // (1,2),(3,5) in 1-based inclusive terms
        assert_eq!(cfg(5, &[2]).blocks(), vec![0..2, 2..5]);
        assert_eq!(cfg(3, &[]).blocks(), vec![0..3]);
        assert_eq!(cfg(3, &[1, 2]).blocks(), vec![0..1, 1..2, 2..3]);
    }

    #[test]
    fn rejects_bad_changepoints() {
        assert!(BlockConfig::new(0, vec![]).is_err());
        assert!(BlockConfig::new(4, vec![0]).is_err());
        assert!(BlockConfig::new(4, vec![4]).is_err());
        assert!(BlockConfig::new(4, vec![2, 2]).is_err());
        assert!(BlockConfig::new(4, vec![3, 1]).is_err());
        assert!(BlockConfig::new(1, vec![]).is_ok());
    }

    #[test]
    fn mask_round_trip() {
        let c = BlockConfig::from_mask(6, 0b10011).unwrap();
        assert_eq!(c.changepoints(), &[1, 2, 5]);
        assert!(BlockConfig::from_mask(3, 0b100).is_err());
        assert_eq!(BlockConfig::from_mask(1, 0).unwrap().num_blocks(), 1);
    }

    #[test]
    fn block_of_and_labels_agree() {
        let c = cfg(7, &[2, 3, 6]);
        let labels = c.labels();
        assert_eq!(labels, vec![0, 0, 1, 2, 2, 2, 3]);
        for (i, &l) in labels.iter().enumerate() {
            assert_eq!(c.block_of(i), l);
        }
    }

    #[test]
    fn stats_by_hand() {
        let d = SequenceData::new(vec![1.0, 3.0, 5.0], None).unwrap();
        let s = block_stats(&d, &cfg(3, &[2])).unwrap();
        assert_eq!(s.sizes(), vec![2, 1]);
        assert_eq!(s.means(), vec![2.0, 5.0]);
        assert_eq!(s.blocks[0].rss, 2.0);
        assert_eq!(s.blocks[1].rss, 0.0);

        let d = SequenceData::new(vec![0.0, 2.0], None).unwrap();
        let s = block_stats(&d, &cfg(2, &[])).unwrap();
        assert_eq!((s.blocks[0].size, s.blocks[0].mean, s.blocks[0].rss), (2, 1.0, 2.0));
    }

    #[test]
    fn constant_sequence_has_zero_rss() {
        let d = SequenceData::new(vec![1.25; 6], None).unwrap();
        for mask in 0..32u64 {
            let s = block_stats(&d, &BlockConfig::from_mask(6, mask).unwrap()).unwrap();
            assert!(s.blocks.iter().all(|b| b.mean == 1.25 && b.rss == 0.0));
        }
    }

    #[test]
    fn stats_length_mismatch() {
        let d = SequenceData::new(vec![0.0; 4], None).unwrap();
        assert!(matches!(block_stats(&d, &cfg(5, &[])), Err(Error::Config(_))));
    }

    #[test]
    fn fitted_vector_cases() {
        assert_eq!(
            fitted_vector(&cfg(4, &[2]), &[1.5, -2.0]).unwrap(),
            vec![1.5, 1.5, -2.0, -2.0]
        );
        assert_eq!(fitted_vector(&cfg(3, &[]), &[7.0]).unwrap(), vec![7.0; 3]);
        let theta = [3.0, 1.0, 4.0, 1.0];
        assert_eq!(fitted_vector(&BlockConfig::saturated(4).unwrap(), &theta).unwrap(), theta);
        assert!(fitted_vector(&cfg(4, &[2]), &[1.0]).is_err());
    }

    #[test]
    fn sequence_validation() {
        assert!(SequenceData::new(vec![], None).is_err());
        assert!(SequenceData::new(vec![f64::NAN], None).is_err());
        assert!(SequenceData::new(vec![1.0], Some(0.0)).is_err());
        assert!(SequenceData::new(vec![1.0], Some(0.5)).is_ok());
    }

    #[test]
    fn of_vector_recovers_changepoints() {
        let c = BlockConfig::of_vector(&[1.0, 1.0, 2.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(c.changepoints(), &[2, 5]);
    }
}
