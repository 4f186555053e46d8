//! Log-probability of sampled trajectories under the smoothed switching
//! policy and its parameter gradient.

use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::network::{ParamGrad, PolicyParams};
use super::{mixture_prob, option_index, p_os, rl_decide, rl_probs};
use crate::error::{Error, Result};
use crate::ledger::Decision;

/// Everything needed to rebuild the action distribution at one arrival.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub features: Vec<FeatureVector>,
    pub row: Vec<f64>,
    pub available: Vec<bool>,
    /// Switching margin (`r_diff`) for each option, indexed `0 = skip`,
    /// `u + 1 = assign(u)`; `-inf` for unavailable items.
    pub margins: Vec<f64>,
    /// Expert decision, or skip when the expert's item is unavailable.
    pub expert_target: Decision,
    pub sampled: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub temperature: f64,
    pub steps: Vec<TrajectoryStep>,
    pub total_reward: f64,
}

struct StepDistribution {
    rl: Vec<f64>,
    follow: f64,
    mixture: Vec<f64>,
}

fn distribution(step: &TrajectoryStep, scores: &[f64], temperature: f64) -> StepDistribution {
    let proposal = rl_decide(scores, &step.available);
    let follow = p_os(step.margins[option_index(proposal)], temperature);
    let rl = rl_probs(scores, &step.available);
    let mixture = mixture_prob(&rl, follow, step.expert_target);
    StepDistribution { rl, follow, mixture }
}

fn scores_of(params: &PolicyParams, step: &TrajectoryStep) -> Result<Vec<f64>> {
    step.features
        .iter()
        .zip(&step.row)
        .zip(&step.available)
        .map(|((f, &w), &ok)| if ok { Ok(w - params.forward(f)?) } else { Ok(0.0) })
        .collect()
}

/// Action distribution over options at one recorded step.
pub fn step_distribution(params: &PolicyParams, step: &TrajectoryStep, temperature: f64) -> Result<Vec<f64>> {
    let scores = scores_of(params, step)?;
    Ok(distribution(step, &scores, temperature).mixture)
}

/// `sum_v log p(x_v)` for the recorded actions.
pub fn trajectory_log_prob(params: &PolicyParams, trajectory: &Trajectory) -> Result<f64> {
    let mut total = 0.0;
    for step in &trajectory.steps {
        let p = step_distribution(params, step, trajectory.temperature)?[option_index(step.sampled)];
        if p <= 0.0 {
            return Err(Error::Invariant("sampled action has zero probability".into()));
        }
        total += p.ln();
    }
    Ok(total)
}

/// `(sum_v grad log p(x_v)) * scale`.
///
/// The follow probability depends on the parameters only through the hard
/// proposal, which is locally constant, so gradient flows through the
/// softmax branch of the mixture and into the network.
pub fn scaled_log_prob_gradient(params: &PolicyParams, trajectory: &Trajectory, scale: f64) -> Result<ParamGrad> {
    let mut grad = ParamGrad::zeros_like(params);
    if scale == 0.0 {
        return Ok(grad);
    }
    for step in &trajectory.steps {
        let mut caches = Vec::with_capacity(step.features.len());
        let mut scores = Vec::with_capacity(step.features.len());
        for ((f, &w), &ok) in step.features.iter().zip(&step.row).zip(&step.available) {
            if ok {
                let cache = params.forward_cached(f)?;
                scores.push(w - cache.output());
                caches.push(Some(cache));
            } else {
                scores.push(0.0);
                caches.push(None);
            }
        }
        let dist = distribution(step, &scores, trajectory.temperature);
        let x = option_index(step.sampled);
        let px = dist.mixture[x];
        if px <= 0.0 {
            return Err(Error::Invariant("sampled action has zero probability".into()));
        }
        let branch = dist.follow * dist.rl[x];
        if branch == 0.0 {
            continue;
        }
        for (u, cache) in caches.iter().enumerate() {
            let Some(cache) = cache else { continue };
            let k = u + 1;
            let indicator = if k == x { 1.0 } else { 0.0 };
            // d log p / d s_k, and s_k = w - h_k
            let d_score = branch * (indicator - dist.rl[k]) / px;
            params.backward(cache, -d_score * scale, &mut grad);
        }
    }
    Ok(grad)
}

/// Policy-gradient estimate for one trajectory: the summed log-probability
/// gradient scaled by the trajectory's total reward.
pub fn log_prob_gradient(params: &PolicyParams, trajectory: &Trajectory) -> Result<ParamGrad> {
    scaled_log_prob_gradient(params, trajectory, trajectory.total_reward)
}
