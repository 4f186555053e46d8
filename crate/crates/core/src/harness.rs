//! Evaluation of algorithms over instance sets, metrics and report output.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::{run_expert, ExpertKind};
use crate::instance::ProblemInstance;
use crate::ledger::Setting;
use crate::oracle::opt_flow;
use crate::policy::{PolicyParams, PolicyProposer, DEFAULT_DIMS};
use crate::rng::SeededRng;
use crate::switching::{run_episode, SwitchConfig, TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// Policy with robust switching at the configured `rho`.
    Lomar,
    /// Policy alone (`rho = 0`).
    Drl,
    /// A policy trained without switching, run with switching at `rho`.
    DrlOs,
    Greedy,
    Osm,
    Opt,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Lomar => "lomar",
            Algo::Drl => "drl",
            Algo::DrlOs => "drl-os",
            Algo::Greedy => "greedy",
            Algo::Osm => "osm",
            Algo::Opt => "opt",
        })
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lomar" => Algo::Lomar,
            "drl" => Algo::Drl,
            "drl-os" => Algo::DrlOs,
            "greedy" => Algo::Greedy,
            "osm" => Algo::Osm,
            "opt" => Algo::Opt,
            other => return Err(Error::Usage(format!("unknown algorithm '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrReference {
    #[default]
    Opt,
    Expert,
}

impl FromStr for CrReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "opt" => Ok(CrReference::Opt),
            "expert" => Ok(CrReference::Expert),
            other => Err(Error::Usage(format!("unknown CR reference '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub setting: Setting,
    pub expert: ExpertKind,
    pub rho: f64,
    pub budget_b: f64,
    pub cr_reference: CrReference,
    /// Seeds the random policy used when no policy is supplied.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            setting: Setting::NoFreeDisposal,
            expert: ExpertKind::Greedy,
            rho: 0.5,
            budget_b: 0.0,
            cr_reference: CrReference::Opt,
            seed: 0,
        }
    }
}

/// Reward-ratio percentiles, ranked from the best instance down: `p100` is
/// the worst ratio.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: Option<f64>,
    pub p90: Option<f64>,
    pub p99: Option<f64>,
    pub p100: Option<f64>,
}

impl Percentiles {
    pub fn of(ratios: &[f64]) -> Self {
        if ratios.is_empty() {
            return Percentiles::default();
        }
        let mut sorted = ratios.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let at = |k: f64| {
            let rank = ((k / 100.0) * sorted.len() as f64).ceil() as usize;
            Some(sorted[rank.clamp(1, sorted.len()) - 1])
        };
        Percentiles {
            p50: at(50.0),
            p90: at(90.0),
            p99: at(99.0),
            p100: at(100.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoReport {
    pub algo: String,
    pub avg: f64,
    /// Worst ratio against the reference; `None` when every instance was
    /// excluded.
    pub cr: Option<f64>,
    pub percentiles: Percentiles,
    pub rewards: Vec<f64>,
    /// Per-instance ratio against the reference (`None` when excluded).
    pub ratios: Vec<Option<f64>>,
    /// Instances whose reference reward is zero.
    pub n_excluded: usize,
    pub vs_expert: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vs_drl: Option<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub n_instances: usize,
    pub opt_values: Vec<f64>,
    pub expert_rewards: Vec<f64>,
    pub algorithms: Vec<AlgoReport>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Reward of `algo` on one instance. Switching runs are audited against the
/// robustness bound.
fn run_algo(
    instance: &ProblemInstance,
    algo: Algo,
    policy: &PolicyParams,
    cfg: &EvalConfig,
    opt_value: f64,
) -> Result<f64> {
    let episode = |rho: f64| -> Result<f64> {
        let switch = SwitchConfig::new(rho, cfg.budget_b, cfg.setting)?;
        let mut proposer = PolicyProposer::new(policy);
        let trace = run_episode(instance, &mut proposer, cfg.expert, &switch)?;
        trace.audit()?;
        Ok(trace.reward)
    };
    let reward = match algo {
        Algo::Lomar | Algo::DrlOs => episode(cfg.rho)?,
        Algo::Drl => episode(0.0)?,
        Algo::Greedy => run_expert(ExpertKind::Greedy, cfg.setting, &instance.capacities, &instance.arrivals)?.reward(),
        Algo::Osm => run_expert(ExpertKind::Osm, cfg.setting, &instance.capacities, &instance.arrivals)?.reward(),
        Algo::Opt => opt_value,
    };
    if reward > opt_value + TOLERANCE {
        return Err(Error::Invariant(format!(
            "{algo} reward {reward} exceeds the offline optimum {opt_value}"
        )));
    }
    Ok(reward)
}

/// Runs every algorithm on every instance and aggregates the metrics.
///
/// `policy` drives `lomar`, `drl` and `drl-os`; without one a randomly
/// initialized network seeded by `cfg.seed` is used.
pub fn evaluate(
    instances: &[ProblemInstance],
    algos: &[Algo],
    policy: Option<&PolicyParams>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if instances.is_empty() {
        return Err(Error::Usage("evaluation needs at least one instance".into()));
    }
    SwitchConfig::new(cfg.rho, cfg.budget_b, cfg.setting)?;
    let fallback;
    let policy = match policy {
        Some(p) => {
            p.validate()?;
            p
        }
        None => {
            fallback = PolicyParams::init(&DEFAULT_DIMS, &mut SeededRng::new(cfg.seed));
            &fallback
        }
    };

    let per_instance: Vec<Result<(f64, f64, Vec<f64>)>> = instances
        .par_iter()
        .map(|inst| {
            let opt_value = opt_flow(inst).value;
            let expert_reward = run_expert(cfg.expert, cfg.setting, &inst.capacities, &inst.arrivals)?.reward();
            let rewards = algos
                .iter()
                .map(|&a| run_algo(inst, a, policy, cfg, opt_value))
                .collect::<Result<Vec<_>>>()?;
            Ok((opt_value, expert_reward, rewards))
        })
        .collect();
    let per_instance = per_instance.into_iter().collect::<Result<Vec<_>>>()?;

    let opt_values: Vec<f64> = per_instance.iter().map(|r| r.0).collect();
    let expert_rewards: Vec<f64> = per_instance.iter().map(|r| r.1).collect();
    let drl_column = algos.iter().position(|&a| a == Algo::Drl);

    let algorithms = algos
        .iter()
        .enumerate()
        .map(|(col, algo)| {
            let rewards: Vec<f64> = per_instance.iter().map(|r| r.2[col]).collect();
            let reference = match cfg.cr_reference {
                CrReference::Opt => &opt_values,
                CrReference::Expert => &expert_rewards,
            };
            let ratios: Vec<Option<f64>> = rewards.iter().zip(reference).map(|(&r, &d)| ratio(r, d)).collect();
            let kept: Vec<f64> = ratios.iter().flatten().copied().collect();
            let percentiles = Percentiles::of(&kept);
            let vs_expert = rewards.iter().zip(&expert_rewards).map(|(&r, &d)| ratio(r, d)).collect();
            let vs_drl = drl_column.map(|c| {
                rewards
                    .iter()
                    .zip(&per_instance)
                    .map(|(&r, inst)| ratio(r, inst.2[c]))
                    .collect()
            });
            AlgoReport {
                algo: algo.to_string(),
                avg: rewards.iter().sum::<f64>() / rewards.len() as f64,
                cr: percentiles.p100,
                percentiles,
                n_excluded: ratios.len() - kept.len(),
                rewards,
                ratios,
                vs_expert,
                vs_drl,
            }
        })
        .collect();

    Ok(EvalReport {
        config: cfg.clone(),
        n_instances: instances.len(),
        opt_values,
        expert_rewards,
        algorithms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Usage(format!("unknown report format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: &str = "algo,avg,cr,p50,p90,p99,p100,n_instances,n_opt_zero";

fn opt_cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn report_render(report: &EvalReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for a in &report.algorithms {
                let p = &a.percentiles;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    a.algo,
                    a.avg,
                    opt_cell(a.cr),
                    opt_cell(p.p50),
                    opt_cell(p.p90),
                    opt_cell(p.p99),
                    opt_cell(p.p100),
                    a.rewards.len(),
                    a.n_excluded
                ));
            }
            Ok(out)
        }
    }
}

pub fn parse_report(json: &str) -> Result<EvalReport> {
    Ok(serde_json::from_str(json)?)
}
