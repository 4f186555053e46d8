//! Learned scoring policy: features, network, proposal rule, the smoothed
//! switching used in training, and the policy-gradient trainer.
//!
//! Decision options are indexed as `0 = skip`, `u + 1 = assign(u)`.

pub mod features;
pub mod gradient;
pub mod network;
pub mod train;

use crate::error::Result;
use crate::instance::{ProblemInstance, WeightCap};
use crate::ledger::{Decision, MatchLedger};
use crate::switching::{switching_margin, Proposer, StepView, SwitchConfig};

pub use features::{extract_all, extract_features, FeatureVector, RunStats, FEATURE_DIM, FEATURE_SPEC_VERSION};
pub use network::{ParamGrad, PolicyParams, DEFAULT_DIMS};

pub fn option_index(decision: Decision) -> usize {
    decision.item().map_or(0, |u| u + 1)
}

pub fn option_decision(index: usize) -> Decision {
    if index == 0 {
        Decision::Skip
    } else {
        Decision::Assign(index - 1)
    }
}

/// `s_u = w_uv - h(features_u)`.
pub fn score_items(params: &PolicyParams, features: &[FeatureVector], row: &[f64]) -> Result<Vec<f64>> {
    features
        .iter()
        .zip(row)
        .map(|(f, &w)| Ok(w - params.forward(f)?))
        .collect()
}

/// Highest score among available items and skip (score 0). Skip wins ties,
/// then the smaller index.
pub fn rl_decide(scores: &[f64], available: &[bool]) -> Decision {
    let mut best = Decision::Skip;
    let mut best_score = 0.0;
    for (u, (&s, &ok)) in scores.iter().zip(available).enumerate() {
        if ok && s > best_score {
            best = Decision::Assign(u);
            best_score = s;
        }
    }
    best
}

/// Softmax over skip (score 0) and the available items, indexed by option.
/// Unavailable items get probability 0.
pub fn rl_probs(scores: &[f64], available: &[bool]) -> Vec<f64> {
    let max = scores
        .iter()
        .zip(available)
        .filter(|(_, &ok)| ok)
        .map(|(&s, _)| s)
        .fold(0.0, f64::max);
    let mut probs = Vec::with_capacity(scores.len() + 1);
    probs.push((0.0 - max).exp());
    for (&s, &ok) in scores.iter().zip(available) {
        probs.push(if ok { (s - max).exp() } else { 0.0 });
    }
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    probs
}

/// Signed slack of the switching condition for `proposal`; positive iff the
/// condition holds.
pub fn r_diff(
    actual: &MatchLedger,
    expert: &MatchLedger,
    proposal: Decision,
    row: &[f64],
    caps: &[WeightCap],
    cfg: &SwitchConfig,
) -> f64 {
    switching_margin(actual, expert, proposal, row, caps, cfg)
}

/// Probability of following the learned proposal: `sigmoid(r_diff / t)`.
pub fn p_os(r_diff: f64, t: f64) -> f64 {
    let x = r_diff / t;
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `p_follow * rl_probs + (1 - p_follow) * onehot(expert)`.
pub fn mixture_prob(rl_probs: &[f64], p_follow: f64, expert_target: Decision) -> Vec<f64> {
    let target = option_index(expert_target);
    rl_probs
        .iter()
        .enumerate()
        .map(|(i, &p)| p_follow * p + if i == target { 1.0 - p_follow } else { 0.0 })
        .collect()
}

/// Deterministic proposer driven by a policy network.
pub struct PolicyProposer<'a> {
    params: &'a PolicyParams,
    stats: RunStats,
}

impl<'a> PolicyProposer<'a> {
    pub fn new(params: &'a PolicyParams) -> Self {
        PolicyProposer {
            params,
            stats: RunStats::default(),
        }
    }
}

impl Proposer for PolicyProposer<'_> {
    fn begin(&mut self, instance: &ProblemInstance) {
        self.stats = RunStats::new(instance.num_offline, instance.num_online());
    }

    fn propose(&mut self, view: &StepView<'_>) -> Result<Decision> {
        let features = extract_all(&self.stats, view.actual, view.row);
        let scores = score_items(self.params, &features, view.row)?;
        let available: Vec<bool> = (0..scores.len()).map(|u| view.actual.is_available(u)).collect();
        Ok(rl_decide(&scores, &available))
    }

    fn observe(&mut self, row: &[f64], actual: Decision, _ledger: &MatchLedger) {
        self.stats.observe(row, actual);
    }
}
