//! Metropolis-Hastings over block configurations with conjugate draws of the
//! block means at every retained iteration.

mod chain;
mod proposal;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chain::{mh_step, sample_theta, ChainState, PrefixSums, StepOutcome, Target};
pub use proposal::{kind_probabilities, movable_count, propose, Move, MoveKind, Proposal};

use crate::error::{Error, Result};
use crate::model::{BlockConfig, Hyperparams, SequenceData};

/// Mixture weights of the three move kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalWeights {
    pub split: f64,
    pub merge: f64,
    pub shift: f64,
}

impl Default for ProposalWeights {
    fn default() -> Self {
        Self {
            split: 0.4,
            merge: 0.4,
            shift: 0.2,
        }
    }
}

impl ProposalWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.split, self.merge, self.shift];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::config("proposal weights must be non-negative"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::config("proposal weights must sum to 1"));
        }
        // without both of these the chain cannot move in both directions of |B|
        if self.split == 0.0 || self.merge == 0.0 {
            return Err(Error::config("split and merge weights must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
    pub proposal_weights: ProposalWeights,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 50_000,
            burn_in: 10_000,
            thin: 10,
            seed: 0,
            chains: 2,
            proposal_weights: ProposalWeights::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::config("thin must be positive"));
        }
        if self.iterations - self.burn_in < self.thin {
            return Err(Error::config("no iteration would be retained after burn-in and thinning"));
        }
        if self.chains == 0 {
            return Err(Error::config("at least one chain is required"));
        }
        self.proposal_weights.validate()
    }

    /// Retained draws per chain, `(iterations - burn_in) / thin`.
    pub fn draws_per_chain(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of chain `k`: the `(k+1)`-th output of a SplitMix64 stream started at `seed`.
pub fn chain_seed(seed: u64, k: usize) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    splitmix64(seed.wrapping_add(GAMMA.wrapping_mul(k as u64 + 1)))
}

/// Proposal and acceptance tallies per move kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceCounts {
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
}

impl AcceptanceCounts {
    pub fn record(&mut self, outcome: StepOutcome) {
        if let Some(kind) = outcome.kind {
            self.proposed[kind.index()] += 1;
            if outcome.accepted {
                self.accepted[kind.index()] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &AcceptanceCounts) {
        for i in 0..3 {
            self.proposed[i] += other.proposed[i];
            self.accepted[i] += other.accepted[i];
        }
    }

    /// Accepted / proposed for `kind`; `None` if it was never proposed.
    pub fn rate(&self, kind: MoveKind) -> Option<f64> {
        let i = kind.index();
        (self.proposed[i] > 0).then(|| self.accepted[i] as f64 / self.proposed[i] as f64)
    }
}

/// One retained draw of `(B, theta_B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    /// 0-based MH iteration at which the draw was retained.
    pub iteration: usize,
    pub config: BlockConfig,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSamples {
    pub chain: usize,
    pub seed: u64,
    pub draws: Vec<Draw>,
    pub acceptance: AcceptanceCounts,
}

/// Draws from every chain, ordered by chain index then iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub n: usize,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub sampler: SamplerConfig,
    pub chains: Vec<ChainSamples>,
}

impl PosteriorSamples {
    pub fn draws(&self) -> impl Iterator<Item = &Draw> + '_ {
        self.chains.iter().flat_map(|c| c.draws.iter())
    }

    pub fn num_draws(&self) -> usize {
        self.chains.iter().map(|c| c.draws.len()).sum()
    }

    pub fn acceptance(&self) -> AcceptanceCounts {
        let mut total = AcceptanceCounts::default();
        for c in &self.chains {
            total.merge(&c.acceptance);
        }
        total
    }

    /// Merges sample sets over the same data, keeping chain order stable.
    pub fn merge(mut self, other: PosteriorSamples) -> Result<PosteriorSamples> {
        if self.n != other.n {
            return Err(Error::config("cannot merge samples of different lengths"));
        }
        self.chains.extend(other.chains);
        self.chains.sort_by_key(|c| c.chain);
        Ok(self)
    }
}

/// Runs a single chain from the one-block state.
pub fn run_single_chain(target: &Target<'_>, sc: &SamplerConfig, chain: usize) -> Result<ChainSamples> {
    let seed = chain_seed(sc.seed, chain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = ChainState::initial(target)?;
    let mut acceptance = AcceptanceCounts::default();
    let mut draws = Vec::with_capacity(sc.draws_per_chain());
    for it in 0..sc.iterations {
        let outcome = mh_step(&mut state, target, &sc.proposal_weights, &mut rng);
        acceptance.record(outcome);
        if it >= sc.burn_in && (it - sc.burn_in + 1).is_multiple_of(sc.thin) {
            let theta = chain::draw_from_stats(&state.stats, &target.hp, &mut rng);
            draws.push(Draw {
                iteration: it,
                config: state.config.clone(),
                theta,
            });
        }
    }
    Ok(ChainSamples {
        chain,
        seed,
        draws,
        acceptance,
    })
}

/// Runs `sc.chains` independent chains concurrently and collects their draws.
///
/// Output depends only on `(data, hp, sc)`, not on the thread count.
pub fn run_chain(data: &SequenceData, hp: &Hyperparams, sc: &SamplerConfig) -> Result<PosteriorSamples> {
    sc.validate()?;
    let target = Target::new(data, *hp)?;
    let chains = (0..sc.chains)
        .into_par_iter()
        .map(|k| run_single_chain(&target, sc, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSamples {
        n: data.len(),
        seed: sc.seed,
        hyperparams: *hp,
        sampler: *sc,
        chains,
    })
}
