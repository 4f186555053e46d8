//! Policy-gradient training with smoothed switching.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{extract_all, RunStats};
use super::gradient::{scaled_log_prob_gradient, Trajectory, TrajectoryStep};
use super::network::{ParamGrad, PolicyParams, DEFAULT_DIMS};
use super::{mixture_prob, option_decision, option_index, p_os, r_diff, rl_decide, rl_probs, score_items};
use crate::error::{Error, Result};
use crate::experts::{Expert, ExpertKind};
use crate::instance::ProblemInstance;
use crate::ledger::{Decision, MatchLedger, Setting};
use crate::rng::SeededRng;
use crate::switching::SwitchConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub rho: f64,
    pub budget_b: f64,
    pub setting: Setting,
    pub expert: ExpertKind,
    pub t0: f64,
    pub t_decay: f64,
    pub t_floor: f64,
    pub seed: u64,
    pub dims: Vec<usize>,
    /// Constant subtracted from each trajectory reward; `None` disables it.
    pub baseline: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 100,
            learning_rate: 1e-3,
            rho: 0.4,
            budget_b: 0.0,
            setting: Setting::NoFreeDisposal,
            expert: ExpertKind::Greedy,
            t0: 1.0,
            t_decay: 0.99,
            t_floor: 0.05,
            seed: 0,
            dims: DEFAULT_DIMS.to_vec(),
            baseline: None,
        }
    }
}

impl TrainConfig {
    pub fn switch_config(&self) -> Result<SwitchConfig> {
        SwitchConfig::new(self.rho, self.budget_b, self.setting)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, message: &str| {
            Err(Error::Config {
                field,
                message: message.to_string(),
            })
        };
        if self.batch_size < 1 {
            return bad("batch_size", "must be at least 1");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate", "must be positive");
        }
        if self.t0.is_nan() || self.t0 <= 0.0 {
            return bad("t0", "must be positive");
        }
        if !(self.t_decay > 0.0 && self.t_decay <= 1.0) {
            return bad("t_decay", "must lie in (0, 1]");
        }
        if self.t_floor.is_nan() || self.t_floor <= 0.0 {
            return bad("t_floor", "must be positive");
        }
        self.switch_config()?;
        Ok(())
    }
}

/// One sampled episode under the smoothed switching policy.
pub fn rollout(
    instance: &ProblemInstance,
    params: &PolicyParams,
    expert_kind: ExpertKind,
    cfg: &SwitchConfig,
    temperature: f64,
    rng: &mut SeededRng,
) -> Result<Trajectory> {
    let n_off = instance.num_offline;
    let mut expert = Expert::new(expert_kind, cfg.setting, &instance.capacities, instance.num_online());
    let mut actual = MatchLedger::new(cfg.setting, &instance.capacities);
    let mut stats = RunStats::new(n_off, instance.num_online());
    let mut steps = Vec::with_capacity(instance.num_online());

    for row in &instance.arrivals {
        let expert_decision = expert.advance(row)?;
        let features = extract_all(&stats, &actual, row);
        let scores = score_items(params, &features, row)?;
        let available: Vec<bool> = (0..n_off).map(|u| actual.is_available(u)).collect();
        let proposal = rl_decide(&scores, &available);

        let mut margins = vec![f64::NEG_INFINITY; n_off + 1];
        for (idx, m) in margins.iter_mut().enumerate() {
            let d = option_decision(idx);
            if actual.is_feasible(d) {
                *m = r_diff(&actual, expert.shadow(), d, row, &instance.weight_caps, cfg);
            }
        }
        let follow = p_os(margins[option_index(proposal)], temperature);
        let expert_target = if actual.is_feasible(expert_decision) {
            expert_decision
        } else {
            Decision::Skip
        };
        let probs = mixture_prob(&rl_probs(&scores, &available), follow, expert_target);
        let sampled = sample(&probs, rng);

        actual.apply(sampled, row)?;
        stats.observe(row, sampled);
        steps.push(TrajectoryStep {
            features,
            row: row.clone(),
            available,
            margins,
            expert_target,
            sampled,
        });
    }
    Ok(Trajectory {
        temperature,
        steps,
        total_reward: actual.reward(),
    })
}

fn sample(probs: &[f64], rng: &mut SeededRng) -> Decision {
    let x = rng.uniform();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if x < acc {
            return option_decision(i);
        }
    }
    option_decision(last)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    /// Mean sampled-trajectory reward per epoch.
    pub epoch_rewards: Vec<f64>,
}

/// Trains from a seeded initialization.
///
/// Each epoch samples `batch_size` instances (with replacement) and one
/// trajectory per instance, averages the per-trajectory gradients in index
/// order and takes one ascent step. The temperature decays geometrically to
/// its floor after every epoch. Results do not depend on the thread count.
pub fn train(instances: &[ProblemInstance], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(Error::Usage("training needs at least one instance".into()));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let params = PolicyParams::init(&cfg.dims, &mut rng);
    train_from(params, instances, cfg, &mut rng)
}

/// Trains starting from `params`, drawing all randomness from `rng`.
pub fn train_from(
    mut params: PolicyParams,
    instances: &[ProblemInstance],
    cfg: &TrainConfig,
    rng: &mut SeededRng,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let switch = cfg.switch_config()?;
    let mut temperature = cfg.t0;
    let mut epoch_rewards = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let jobs: Vec<(usize, u64)> = (0..cfg.batch_size)
            .map(|_| (rng.below(instances.len() as u64) as usize, rng.next_u64()))
            .collect();
        let results: Vec<Result<(ParamGrad, f64)>> = jobs
            .par_iter()
            .map(|&(idx, seed)| {
                let mut traj_rng = SeededRng::new(seed);
                let traj = rollout(&instances[idx], &params, cfg.expert, &switch, temperature, &mut traj_rng)?;
                let scale = traj.total_reward - cfg.baseline.unwrap_or(0.0);
                let grad = scaled_log_prob_gradient(&params, &traj, scale)?;
                Ok((grad, traj.total_reward))
            })
            .collect();

        let mut total = ParamGrad::zeros_like(&params);
        let mut reward_sum = 0.0;
        for r in results {
            let (g, reward) = r?;
            total.add_scaled(&g, 1.0);
            reward_sum += reward;
        }
        params.apply_update(&total, cfg.learning_rate / cfg.batch_size as f64);
        if !params.is_finite() {
            return Err(Error::Training { epoch });
        }
        epoch_rewards.push(reward_sum / cfg.batch_size as f64);
        temperature = (temperature * cfg.t_decay).max(cfg.t_floor);
    }
    Ok(TrainOutcome { params, epoch_rewards })
}
