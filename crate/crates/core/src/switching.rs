//! Robust switching between a proposer (typically the learned policy) and an
//! expert, for both disposal settings.
//!
//! At each arrival the expert advances on its shadow ledger first; the
//! proposal is then followed only if the running reward, after taking it,
//! still covers `rho` times the expert's reward plus a hedge for the reward
//! the expert could still collect from capacity the actual run has used up.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::{Expert, ExpertKind};
use crate::instance::{ProblemInstance, WeightCap};
use crate::ledger::{Decision, MatchLedger, Setting};

/// Slack granted to every robustness inequality.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchRule {
    /// Condition with the hedging term.
    #[default]
    Hedged,
    /// `R_prev + gain >= rho * R_expert - B` with no hedge. Not robust; kept
    /// as a comparison baseline.
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchConfig {
    pub rho: f64,
    pub budget_b: f64,
    pub setting: Setting,
    #[serde(default)]
    pub rule: SwitchRule,
}

impl SwitchConfig {
    pub fn new(rho: f64, budget_b: f64, setting: Setting) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Config {
                field: "rho",
                message: format!("must lie in [0, 1], got {rho}"),
            });
        }
        if !budget_b.is_finite() || budget_b < 0.0 {
            return Err(Error::Config {
                field: "budget_b",
                message: format!("must be finite and ≥ 0, got {budget_b}"),
            });
        }
        Ok(SwitchConfig {
            rho,
            budget_b,
            setting,
            rule: SwitchRule::Hedged,
        })
    }

    pub fn with_rule(mut self, rule: SwitchRule) -> Self {
        self.rule = rule;
        self
    }

    /// `rho * (expert_reward + hedge) - B`, with `rho = 0` short-circuiting so
    /// that an infinite hedge contributes nothing.
    pub fn requirement(&self, expert_reward: f64, hedge: f64) -> f64 {
        if self.rho == 0.0 {
            -self.budget_b
        } else {
            self.rho * (expert_reward + hedge) - self.budget_b
        }
    }
}

/// Reservation term without free disposal: for each item, the number of
/// matches the actual run would hold beyond the expert's, times the item's
/// weight cap. Infinite when any such excess meets an unbounded cap.
pub fn hedge_nfd(
    actual: &MatchLedger,
    expert: &MatchLedger,
    proposal: Decision,
    caps: &[WeightCap],
) -> f64 {
    let mut total = 0.0;
    for (u, cap) in caps.iter().enumerate() {
        let extra = usize::from(proposal == Decision::Assign(u));
        let excess = (actual.count(u) + extra) as i64 - expert.count(u) as i64;
        if excess > 0 {
            match cap {
                WeightCap::Unbounded => return f64::INFINITY,
                WeightCap::Finite(w) => total += excess as f64 * w,
            }
        }
    }
    total
}

pub fn condition_nfd(r_prev: f64, w_proposed: f64, r_expert: f64, hedge: f64, cfg: &SwitchConfig) -> bool {
    r_prev + w_proposed >= cfg.requirement(r_expert, hedge) - TOLERANCE
}

/// `(max_i sum_{j<=i} (ours_j - theirs_j))^+` over two increasing top sets of
/// equal length.
pub fn top_set_gap(ours: &[f64], theirs: &[f64]) -> f64 {
    debug_assert_eq!(ours.len(), theirs.len());
    let mut prefix = 0.0;
    let mut best = 0.0f64;
    for (a, b) in ours.iter().zip(theirs) {
        prefix += a - b;
        best = best.max(prefix);
    }
    best
}

/// Hedging reward with free disposal. The actual run's top set for the
/// proposed item includes the current arrival.
pub fn hedge_fd(actual: &MatchLedger, expert: &MatchLedger, proposal: Decision, row: &[f64]) -> f64 {
    (0..actual.num_offline())
        .map(|u| {
            let ours = if proposal == Decision::Assign(u) {
                let mut m = actual.matched(u).to_vec();
                m.push(row[u]);
                crate::ledger::top_set(&m, actual.capacity(u))
            } else {
                actual.top_set(u)
            };
            top_set_gap(&ours, &expert.top_set(u))
        })
        .sum()
}

pub fn condition_fd(r_prev: f64, delta_f: f64, r_expert: f64, hedge: f64, cfg: &SwitchConfig) -> bool {
    r_prev + delta_f >= cfg.requirement(r_expert, hedge) - TOLERANCE
}

/// Hedge term for `proposal` in the active setting and rule.
pub fn proposal_hedge(
    actual: &MatchLedger,
    expert: &MatchLedger,
    proposal: Decision,
    row: &[f64],
    caps: &[WeightCap],
    cfg: &SwitchConfig,
) -> f64 {
    match (cfg.rule, cfg.setting) {
        (SwitchRule::Naive, _) => 0.0,
        (SwitchRule::Hedged, Setting::NoFreeDisposal) => hedge_nfd(actual, expert, proposal, caps),
        (SwitchRule::Hedged, Setting::FreeDisposal) => hedge_fd(actual, expert, proposal, row),
    }
}

/// Left-hand side minus right-hand side of the switching condition for
/// `proposal` (positive iff the condition holds, ignoring tolerance).
/// `expert` must already include the current arrival.
pub fn switching_margin(
    actual: &MatchLedger,
    expert: &MatchLedger,
    proposal: Decision,
    row: &[f64],
    caps: &[WeightCap],
    cfg: &SwitchConfig,
) -> f64 {
    let hedge = proposal_hedge(actual, expert, proposal, row, caps, cfg);
    actual.reward() + actual.gain_of(proposal, row) - cfg.requirement(expert.reward(), hedge)
}

/// Slack of the robustness inequality once the arrival has been applied to
/// both ledgers: the switching condition with the proposal term removed.
pub fn resting_slack(actual: &MatchLedger, expert: &MatchLedger, caps: &[WeightCap], cfg: &SwitchConfig) -> f64 {
    let hedge = match cfg.setting {
        Setting::NoFreeDisposal => hedge_nfd(actual, expert, Decision::Skip, caps),
        Setting::FreeDisposal => (0..actual.num_offline())
            .map(|u| top_set_gap(&actual.top_set(u), &expert.top_set(u)))
            .sum(),
    };
    actual.reward() - cfg.requirement(expert.reward(), hedge)
}

/// Outcome of one switching decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchOutcome {
    pub decision: Decision,
    pub followed_proposal: bool,
    pub hedge: f64,
}

/// Chooses the actual decision for one arrival. `expert` must already
/// include the expert's decision for this arrival.
pub fn lomar_step(
    actual: &MatchLedger,
    expert: &MatchLedger,
    proposal: Decision,
    expert_decision: Decision,
    row: &[f64],
    caps: &[WeightCap],
    cfg: &SwitchConfig,
) -> SwitchOutcome {
    let hedge = proposal_hedge(actual, expert, proposal, row, caps, cfg);
    let gain = actual.gain_of(proposal, row);
    let pass = match cfg.setting {
        Setting::NoFreeDisposal => condition_nfd(actual.reward(), gain, expert.reward(), hedge, cfg),
        Setting::FreeDisposal => condition_fd(actual.reward(), gain, expert.reward(), hedge, cfg),
    };
    let decision = if pass {
        proposal
    } else if actual.is_feasible(expert_decision) {
        expert_decision
    } else {
        Decision::Skip
    };
    SwitchOutcome {
        decision,
        followed_proposal: pass,
        hedge,
    }
}

/// What a proposer sees before the current arrival is decided.
pub struct StepView<'a> {
    /// 1-based arrival index.
    pub step: usize,
    pub num_online: usize,
    pub row: &'a [f64],
    pub actual: &'a MatchLedger,
    /// Expert shadow, already advanced for this arrival.
    pub expert: &'a MatchLedger,
    pub expert_decision: Decision,
}

/// Source of per-arrival proposals.
pub trait Proposer {
    fn begin(&mut self, _instance: &ProblemInstance) {}

    fn propose(&mut self, view: &StepView<'_>) -> Result<Decision>;

    /// Called after the actual decision has been applied.
    fn observe(&mut self, _row: &[f64], _actual: Decision, _actual_ledger: &MatchLedger) {}
}

/// Fixed decision sequence; arrivals beyond its end are skipped.
#[derive(Clone, Debug)]
pub struct ScriptedProposer {
    decisions: Vec<Decision>,
}

impl ScriptedProposer {
    pub fn new(decisions: Vec<Decision>) -> Self {
        ScriptedProposer { decisions }
    }
}

impl Proposer for ScriptedProposer {
    fn propose(&mut self, view: &StepView<'_>) -> Result<Decision> {
        Ok(self.decisions.get(view.step - 1).copied().unwrap_or(Decision::Skip))
    }
}

/// Proposer backed by a closure.
pub struct FnProposer<F>(pub F);

impl<F> Proposer for FnProposer<F>
where
    F: FnMut(&StepView<'_>) -> Decision,
{
    fn propose(&mut self, view: &StepView<'_>) -> Result<Decision> {
        Ok((self.0)(view))
    }
}

/// Proposes exactly what the expert chose on its shadow.
#[derive(Clone, Copy, Debug, Default)]
pub struct MirrorExpert;

impl Proposer for MirrorExpert {
    fn propose(&mut self, view: &StepView<'_>) -> Result<Decision> {
        Ok(view.expert_decision)
    }
}

/// Proposer that wastes capacity: the available item with the smallest
/// positive weight.
#[derive(Clone, Copy, Debug, Default)]
pub struct LightestEdge;

impl Proposer for LightestEdge {
    fn propose(&mut self, view: &StepView<'_>) -> Result<Decision> {
        let mut best: Option<usize> = None;
        for (u, &w) in view.row.iter().enumerate() {
            if w > 0.0 && view.actual.is_available(u) && best.is_none_or(|b| w < view.row[b]) {
                best = Some(u);
            }
        }
        Ok(best.map_or(Decision::Skip, Decision::Assign))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub proposal: Decision,
    pub expert_decision: Decision,
    pub decision: Decision,
    pub followed_proposal: bool,
    pub reward: f64,
    pub expert_reward: f64,
    pub hedge: f64,
    /// Resting robustness slack after the step.
    pub slack: f64,
    /// `max_u (|V_u| - |V^pi_u|)` after the step.
    pub max_count_excess: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: SwitchConfig,
    pub steps: Vec<StepRecord>,
    pub reward: f64,
    pub expert_reward: f64,
    pub actual: MatchLedger,
    pub expert: MatchLedger,
}

impl RunTrace {
    pub fn decisions(&self) -> Vec<Decision> {
        self.steps.iter().map(|s| s.decision).collect()
    }

    pub fn expert_decisions(&self) -> Vec<Decision> {
        self.steps.iter().map(|s| s.expert_decision).collect()
    }

    /// Whether the final reward meets `rho * R_expert - B` within tolerance.
    pub fn meets_final_bound(&self) -> bool {
        self.reward >= self.config.requirement(self.expert_reward, 0.0) - TOLERANCE
    }

    /// Checks the per-step and final robustness inequalities.
    pub fn audit(&self) -> Result<()> {
        for (v, s) in self.steps.iter().enumerate() {
            if s.slack < -TOLERANCE {
                return Err(Error::Invariant(format!(
                    "robustness slack {} < 0 after arrival {}",
                    s.slack,
                    v + 1
                )));
            }
        }
        if !self.meets_final_bound() {
            return Err(Error::Invariant(format!(
                "final reward {} below rho * {} - B",
                self.reward, self.expert_reward
            )));
        }
        Ok(())
    }
}

/// Runs one episode of robust switching.
///
/// Infeasible proposals (a full item without free disposal, or an index out
/// of range) are treated as skip.
pub fn run_episode(
    instance: &ProblemInstance,
    proposer: &mut dyn Proposer,
    expert_kind: ExpertKind,
    cfg: &SwitchConfig,
) -> Result<RunTrace> {
    let n_online = instance.num_online();
    let mut expert = Expert::new(expert_kind, cfg.setting, &instance.capacities, n_online);
    let mut actual = MatchLedger::new(cfg.setting, &instance.capacities);
    let caps = &instance.weight_caps;
    let mut steps = Vec::with_capacity(n_online);
    proposer.begin(instance);

    for (v, row) in instance.arrivals.iter().enumerate() {
        let expert_decision = expert.advance(row)?;
        let view = StepView {
            step: v + 1,
            num_online: n_online,
            row,
            actual: &actual,
            expert: expert.shadow(),
            expert_decision,
        };
        let mut proposal = proposer.propose(&view)?;
        if proposal.item().is_some_and(|u| u >= instance.num_offline) || !actual.is_feasible(proposal) {
            proposal = Decision::Skip;
        }
        let outcome = lomar_step(&actual, expert.shadow(), proposal, expert_decision, row, caps, cfg);
        actual.apply(outcome.decision, row).map_err(|e| {
            Error::Invariant(format!("switching produced an infeasible decision: {e}"))
        })?;
        proposer.observe(row, outcome.decision, &actual);

        let shadow = expert.shadow();
        let max_count_excess = (0..instance.num_offline)
            .map(|u| actual.count(u) as i64 - shadow.count(u) as i64)
            .max()
            .unwrap_or(0);
        steps.push(StepRecord {
            proposal,
            expert_decision,
            decision: outcome.decision,
            followed_proposal: outcome.followed_proposal,
            reward: actual.reward(),
            expert_reward: shadow.reward(),
            hedge: outcome.hedge,
            slack: resting_slack(&actual, shadow, caps, cfg),
            max_count_excess,
        });
    }

    Ok(RunTrace {
        config: *cfg,
        steps,
        reward: actual.reward(),
        expert_reward: expert.shadow().reward(),
        actual,
        expert: expert.shadow().clone(),
    })
}
