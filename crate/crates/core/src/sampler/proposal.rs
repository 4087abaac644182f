use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProposalWeights;
use crate::model::BlockConfig;

/// The three move types of the configuration kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Split,
    Merge,
    Shift,
}

impl MoveKind {
    pub const ALL: [MoveKind; 3] = [MoveKind::Split, MoveKind::Merge, MoveKind::Shift];

    pub fn index(self) -> usize {
        match self {
            MoveKind::Split => 0,
            MoveKind::Merge => 1,
            MoveKind::Shift => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Split => "split",
            MoveKind::Merge => "merge",
            MoveKind::Shift => "shift",
        }
    }
}

/// A single edit of the change-point set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Insert a change point at `pos`; it lands at index `idx` of the sorted list.
    Split { idx: usize, pos: usize },
    /// Remove the change point at index `idx` (position `pos`).
    Merge { idx: usize, pos: usize },
    /// Move the change point at index `idx` from `from` to the adjacent `to`.
    Shift { idx: usize, from: usize, to: usize },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Split { .. } => MoveKind::Split,
            Move::Merge { .. } => MoveKind::Merge,
            Move::Shift { .. } => MoveKind::Shift,
        }
    }

    pub(crate) fn apply_to(&self, cps: &mut Vec<usize>) {
        match *self {
            Move::Split { idx, pos } => cps.insert(idx, pos),
            Move::Merge { idx, .. } => {
                cps.remove(idx);
            }
            Move::Shift { idx, to, .. } => cps[idx] = to,
        }
    }
}

/// A proposed move with `log q(B | B') - log q(B' | B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub mv: Move,
    pub log_proposal_ratio: f64,
}

impl Proposal {
    pub fn kind(&self) -> MoveKind {
        self.mv.kind()
    }

    /// The configuration reached by applying the move to `current`.
    pub fn candidate(&self, current: &BlockConfig) -> BlockConfig {
        let mut cps = current.changepoints().to_vec();
        self.mv.apply_to(&mut cps);
        BlockConfig::from_sorted_unchecked(current.n(), cps)
    }
}

/// Probability of choosing each move kind when the configuration has `k`
/// change points out of `m = n - 1` slots. Infeasible kinds get zero and the
/// remaining weights are renormalized.
pub fn kind_probabilities(k: usize, m: usize, w: &ProposalWeights) -> [f64; 3] {
    let feasible = [k < m, k > 0, k > 0 && k < m];
    let raw = [w.split, w.merge, w.shift];
    let total: f64 = (0..3).filter(|&i| feasible[i]).map(|i| raw[i]).sum();
    let mut out = [0.0; 3];
    if total > 0.0 {
        for i in 0..3 {
            if feasible[i] {
                out[i] = raw[i] / total;
            }
        }
    }
    out
}

fn choose_kind(u: f64, probs: &[f64; 3]) -> MoveKind {
    let mut acc = 0.0;
    for kind in MoveKind::ALL {
        acc += probs[kind.index()];
        if u < acc {
            return kind;
        }
    }
    // rounding left u above the cumulative total
    *MoveKind::ALL
        .iter()
        .rev()
        .find(|k| probs[k.index()] > 0.0)
        .expect("at least one feasible move kind")
}

/// Free slots adjacent to the change point at sorted index `idx`.
fn free_neighbors(cps: &[usize], idx: usize, m: usize) -> ([usize; 2], usize) {
    let c = cps[idx];
    let mut out = [0; 2];
    let mut len = 0;
    if c > 1 && (idx == 0 || cps[idx - 1] != c - 1) {
        out[len] = c - 1;
        len += 1;
    }
    if c < m && (idx + 1 == cps.len() || cps[idx + 1] != c + 1) {
        out[len] = c + 1;
        len += 1;
    }
    (out, len)
}

/// Number of change points with at least one free adjacent slot.
pub fn movable_count(cps: &[usize], m: usize) -> usize {
    (0..cps.len()).filter(|&i| free_neighbors(cps, i, m).1 > 0).count()
}

/// The `r`-th (0-based) slot in `1..=m` not occupied by a change point.
fn nth_free_slot(cps: &[usize], r: usize) -> (usize, usize) {
    let mut pos = r + 1;
    let mut idx = 0;
    while idx < cps.len() && cps[idx] <= pos {
        pos += 1;
        idx += 1;
    }
    (idx, pos)
}

/// Draws one move from the configuration kernel.
///
/// SPLIT inserts a change point uniformly among the free slots, MERGE
/// removes one uniformly, SHIFT picks uniformly among change points with a
/// free neighbour and moves it to one of those neighbours uniformly.
/// Returns `None` only when `n = 1` (no slots at all).
pub fn propose<R: Rng + ?Sized>(
    config: &BlockConfig,
    weights: &ProposalWeights,
    rng: &mut R,
) -> Option<Proposal> {
    let m = config.n() - 1;
    if m == 0 {
        return None;
    }
    let cps = config.changepoints();
    let k = cps.len();
    let probs = kind_probabilities(k, m, weights);

    let kind = choose_kind(rng.random(), &probs);

    let proposal = match kind {
        MoveKind::Split => {
            let (idx, pos) = nth_free_slot(cps, rng.random_range(0..m - k));
            let back = kind_probabilities(k + 1, m, weights);
            let fwd = probs[0].ln() - ((m - k) as f64).ln();
            let rev = back[1].ln() - ((k + 1) as f64).ln();
            Proposal {
                mv: Move::Split { idx, pos },
                log_proposal_ratio: rev - fwd,
            }
        }
        MoveKind::Merge => {
            let idx = rng.random_range(0..k);
            let back = kind_probabilities(k - 1, m, weights);
            let fwd = probs[1].ln() - (k as f64).ln();
            let rev = back[0].ln() - ((m - k + 1) as f64).ln();
            Proposal {
                mv: Move::Merge { idx, pos: cps[idx] },
                log_proposal_ratio: rev - fwd,
            }
        }
        MoveKind::Shift => {
            let movable: Vec<usize> = (0..k).filter(|&i| free_neighbors(cps, i, m).1 > 0).collect();
            let idx = movable[rng.random_range(0..movable.len())];
            let (slots, a) = free_neighbors(cps, idx, m);
            let to = slots[rng.random_range(0..a)];
            let from = cps[idx];

            let mut cand = cps.to_vec();
            cand[idx] = to;
            let (_, a_back) = free_neighbors(&cand, idx, m);
            let movable_back = movable_count(&cand, m);

            // kind probability is the same on both sides (k unchanged)
            let fwd = -(movable.len() as f64).ln() - (a as f64).ln();
            let rev = -(movable_back as f64).ln() - (a_back as f64).ln();
            Proposal {
                mv: Move::Shift { idx, from, to },
                log_proposal_ratio: rev - fwd,
            }
        }
    };
    Some(proposal)
}
