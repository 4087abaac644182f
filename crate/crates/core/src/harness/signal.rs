use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fitted_vector, BlockConfig, SequenceData};

/// Block values: listed explicitly or drawn iid uniform from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockValues {
    Explicit(Vec<f64>),
    Uniform { uniform: (f64, f64) },
}

/// Piecewise-constant test signal plus Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub n: usize,
    /// Change points, same convention as [`BlockConfig`].
    pub boundaries: Vec<usize>,
    pub values: BlockValues,
    /// Noise standard deviation.
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

const EXAMPLE1: &str = include_str!("../../data/example1_standin.json");
const EXAMPLE2: &str = include_str!("../../data/example2.json");

impl SignalSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SignalSpec =
            serde_json::from_str(text).map_err(|e| Error::config(format!("signal spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Seven blocks over 497 points with noise sd 0.2. A stand-in with the
    /// shape of the classic blocks test signal, not its literal values.
    pub fn example1(seed: u64) -> Self {
        Self {
            seed,
            ..Self::from_json(EXAMPLE1).expect("bundled spec is valid")
        }
    }

    /// Twenty equal blocks over 1000 points, values uniform on (-2, 2),
    /// noise sd 0.5.
    pub fn example2(seed: u64) -> Self {
        Self {
            seed,
            ..Self::from_json(EXAMPLE2).expect("bundled spec is valid")
        }
    }

    /// A fixed block shape stretched to length `n`: block `s` ends at
    /// `round(n * ends[s])`.
    pub fn scaled(n: usize, ends: &[f64], values: Vec<f64>, sigma: f64, seed: u64) -> Result<Self> {
        let boundaries = ends.iter().map(|f| (f * n as f64).round() as usize).collect();
        let spec = Self {
            n,
            boundaries,
            values: BlockValues::Explicit(values),
            sigma,
            seed,
            description: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn config(&self) -> Result<BlockConfig> {
        BlockConfig::new(self.n, self.boundaries.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let config = self.config()?;
        match &self.values {
            BlockValues::Explicit(v) => {
                if v.len() != config.num_blocks() {
                    return Err(Error::config(format!(
                        "{} block values for {} blocks",
                        v.len(),
                        config.num_blocks()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::config("block values must be finite"));
                }
            }
            BlockValues::Uniform { uniform: (lo, hi) } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::config("uniform range must satisfy low < high"));
                }
            }
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::config("noise sd must be non-negative"));
        }
        Ok(())
    }
}

/// Simulated observations together with the mean vector that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub data: SequenceData,
    pub truth: Vec<f64>,
}

/// Draws block values (if random) and then the noise, both from the signal spec's
/// seed on a dedicated ChaCha stream.
///
/// The returned data carries `sigma^2` as its known variance when `sigma > 0`.
pub fn simulate(spec: &SignalSpec) -> Result<Simulated> {
    spec.validate()?;
    let config = spec.config()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let values = match &spec.values {
        BlockValues::Explicit(v) => v.clone(),
        BlockValues::Uniform { uniform: (lo, hi) } => {
            let u = Uniform::new(*lo, *hi).map_err(|e| Error::config(e.to_string()))?;
            (0..config.num_blocks()).map(|_| rng.sample(u)).collect()
        }
    };
    let truth = fitted_vector(&config, &values)?;
    let y = if spec.sigma > 0.0 {
        let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::config(e.to_string()))?;
        truth.iter().map(|t| t + rng.sample(noise)).collect()
    } else {
        truth.clone()
    };
    let sigma2 = (spec.sigma > 0.0).then_some(spec.sigma * spec.sigma);
    Ok(Simulated {
        data: SequenceData::new(y, sigma2)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_returns_truth() {
        let spec = SignalSpec {
            n: 6,
            boundaries: vec![2, 4],
            values: BlockValues::Explicit(vec![1.0, -1.0, 0.5]),
            sigma: 0.0,
            seed: 3,
            description: None,
        };
        let sim = simulate(&spec).unwrap();
        assert_eq!(sim.data.y(), sim.truth.as_slice());
        assert_eq!(sim.truth, vec![1.0, 1.0, -1.0, -1.0, 0.5, 0.5]);
        assert_eq!(sim.data.sigma2(), None);
    }

    #[test]
    fn bundled_specs() {
        let e1 = SignalSpec::example1(0);
        assert_eq!(e1.n, 497);
        assert_eq!(e1.config().unwrap().num_blocks(), 7);
        assert_eq!(e1.sigma, 0.2);

        let e2 = SignalSpec::example2(0);
        assert_eq!(e2.n, 1000);
        let blocks = e2.config().unwrap().blocks();
        assert_eq!(blocks.len(), 20);
        assert!(blocks.iter().all(|r| r.len() == 50));
        assert_eq!(e2.sigma, 0.5);
    }

    #[test]
    fn uniform_values_follow_the_seed() {
        let a = simulate(&SignalSpec::example2(7)).unwrap();
        let b = simulate(&SignalSpec::example2(7)).unwrap();
        let c = simulate(&SignalSpec::example2(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.truth, c.truth);
        assert!(a.truth.iter().all(|v| (-2.0..2.0).contains(v)));
        assert_eq!(BlockConfig::of_vector(&a.truth).unwrap().num_blocks(), 20);
        assert_eq!(a.data.sigma2(), Some(0.25));
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = r#"{"n": 5, "boundaries": [2], "values": [1.0], "sigma": 0.1}"#;
        assert!(matches!(SignalSpec::from_json(bad), Err(Error::Config(_))));
        let bad = r#"{"n": 5, "boundaries": [7], "values": [1.0, 2.0], "sigma": 0.1}"#;
        assert!(SignalSpec::from_json(bad).is_err());
        let bad = r#"{"n": 5, "boundaries": [], "values": {"uniform": [2, 1]}, "sigma": 0.1}"#;
        assert!(SignalSpec::from_json(bad).is_err());
        let ok = r#"{"n": 5, "boundaries": [], "values": {"uniform": [-1, 1]}, "sigma": 0.1}"#;
        assert_eq!(SignalSpec::from_json(ok).unwrap().seed, 0);
    }

    #[test]
    fn scaled_shape() {
        let s = SignalSpec::scaled(100, &[0.2, 0.45], vec![0.0, 1.0, 2.0], 0.5, 1).unwrap();
        assert_eq!(s.boundaries, vec![20, 45]);
    }
}
