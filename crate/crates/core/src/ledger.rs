//! Matching state and reward bookkeeping for both disposal settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether offline items may be over-assigned (only the top `c_u` weights
/// count) or are hard-capped at `c_u` matches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    NoFreeDisposal,
    FreeDisposal,
}

/// The per-arrival action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Skip,
    Assign(usize),
}

impl Decision {
    pub fn item(self) -> Option<usize> {
        match self {
            Decision::Skip => None,
            Decision::Assign(u) => Some(u),
        }
    }

    /// Weight collected from `row` if this decision were applied with no
    /// disposal (zero for skip).
    pub fn weight_in(self, row: &[f64]) -> f64 {
        self.item().map_or(0.0, |u| row[u])
    }
}

/// The `c` largest weights of `multiset`, sorted increasing and padded with
/// leading zeros to exactly `c` entries.
///
/// Equal weights are resolved in favour of the earliest inserted element.
pub fn top_set(multiset: &[f64], c: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..multiset.len()).collect();
    // largest first, earlier insertion first among equals
    idx.sort_by(|&a, &b| multiset[b].total_cmp(&multiset[a]).then(a.cmp(&b)));
    idx.truncate(c);
    let mut top: Vec<f64> = idx.into_iter().map(|i| multiset[i]).collect();
    top.reverse();
    let mut padded = vec![0.0; c - top.len()];
    padded.append(&mut top);
    padded
}

/// Counted reward of one offline item: the sum of its top `c` weights.
pub fn f_value(multiset: &[f64], c: usize) -> f64 {
    top_set(multiset, c).iter().sum()
}

/// Marginal counted reward of adding weight `w` to `multiset`.
pub fn delta_f(multiset: &[f64], c: usize, w: f64) -> f64 {
    if multiset.len() < c {
        return w;
    }
    let smallest_counted = top_set(multiset, c)[0];
    (w - smallest_counted).max(0.0)
}

/// Matched weights per offline item plus the running reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchLedger {
    setting: Setting,
    capacities: Vec<u32>,
    matched: Vec<Vec<f64>>,
    reward: f64,
}

impl MatchLedger {
    pub fn new(setting: Setting, capacities: &[u32]) -> Self {
        MatchLedger {
            setting,
            capacities: capacities.to_vec(),
            matched: vec![Vec::new(); capacities.len()],
            reward: 0.0,
        }
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn num_offline(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacity(&self, u: usize) -> usize {
        self.capacities[u] as usize
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn count(&self, u: usize) -> usize {
        self.matched[u].len()
    }

    pub fn matched(&self, u: usize) -> &[f64] {
        &self.matched[u]
    }

    pub fn reward(&self) -> f64 {
        self.reward
    }

    /// Whether `u` can take another match: below capacity without free
    /// disposal, always with it.
    pub fn is_available(&self, u: usize) -> bool {
        match self.setting {
            Setting::NoFreeDisposal => self.count(u) < self.capacity(u),
            Setting::FreeDisposal => true,
        }
    }

    pub fn is_full(&self, u: usize) -> bool {
        self.count(u) >= self.capacity(u)
    }

    pub fn is_feasible(&self, decision: Decision) -> bool {
        decision.item().is_none_or(|u| self.is_available(u))
    }

    /// Reward that `decision` would add without changing the ledger.
    pub fn gain_of(&self, decision: Decision, row: &[f64]) -> f64 {
        match decision {
            Decision::Skip => 0.0,
            Decision::Assign(u) => match self.setting {
                Setting::NoFreeDisposal => row[u],
                Setting::FreeDisposal => delta_f(&self.matched[u], self.capacity(u), row[u]),
            },
        }
    }

    pub fn top_set(&self, u: usize) -> Vec<f64> {
        top_set(&self.matched[u], self.capacity(u))
    }

    /// Applies `decision` for the arrival with weights `row` and returns the
    /// realized gain.
    pub fn apply(&mut self, decision: Decision, row: &[f64]) -> Result<f64> {
        let Decision::Assign(u) = decision else {
            return Ok(0.0);
        };
        if !self.is_available(u) {
            return Err(Error::Capacity { item: u });
        }
        let gain = self.gain_of(decision, row);
        self.matched[u].push(row[u]);
        self.reward += gain;
        Ok(gain)
    }

    /// Reward recomputed from the matched multisets.
    pub fn recomputed_reward(&self) -> f64 {
        match self.setting {
            Setting::NoFreeDisposal => self.matched.iter().flatten().sum(),
            Setting::FreeDisposal => self
                .matched
                .iter()
                .zip(&self.capacities)
                .map(|(m, &c)| f_value(m, c as usize))
                .sum(),
        }
    }
}

/// Functional form of [`MatchLedger::apply`].
pub fn apply_decision(ledger: &MatchLedger, decision: Decision, row: &[f64]) -> Result<(MatchLedger, f64)> {
    let mut next = ledger.clone();
    let gain = next.apply(decision, row)?;
    Ok((next, gain))
}
