//! Hand-designed online algorithms run on their own shadow ledgers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{delta_f, Decision, MatchLedger, Setting};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpertKind {
    Greedy,
    /// Secretary-style threshold rule; the sampling phase length is fixed
    /// per episode by [`osm_phase_length`].
    Osm,
}

impl fmt::Display for ExpertKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpertKind::Greedy => "greedy",
            ExpertKind::Osm => "osm",
        })
    }
}

impl FromStr for ExpertKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(ExpertKind::Greedy),
            "osm" => Ok(ExpertKind::Osm),
            other => Err(Error::Usage(format!("unknown expert '{other}'"))),
        }
    }
}

/// `floor(num_online / e)`.
pub fn osm_phase_length(num_online: usize) -> usize {
    (num_online as f64 / std::f64::consts::E).floor() as usize
}

/// Available item with the largest weight, smallest index on ties.
fn best_available(shadow: &MatchLedger, row: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (u, &w) in row.iter().enumerate() {
        if !shadow.is_available(u) {
            continue;
        }
        if best.is_none_or(|b| w > row[b]) {
            best = Some(u);
        }
    }
    best
}

/// Greedy expert.
///
/// Without free disposal it takes the heaviest available positive edge.
/// With free disposal it maximizes the marginal counted gain, breaking ties
/// by larger raw weight and then smaller index, and skips only a row of
/// all-zero weights.
pub fn greedy_decide(shadow: &MatchLedger, row: &[f64]) -> Decision {
    match shadow.setting() {
        Setting::NoFreeDisposal => match best_available(shadow, row) {
            Some(u) if row[u] > 0.0 => Decision::Assign(u),
            _ => Decision::Skip,
        },
        Setting::FreeDisposal => {
            if row.iter().all(|&w| w == 0.0) {
                return Decision::Skip;
            }
            let gain = |u: usize| delta_f(shadow.matched(u), shadow.capacity(u), row[u]);
            let mut best = 0;
            let mut best_gain = gain(0);
            for u in 1..row.len() {
                let g = gain(u);
                if g > best_gain || (g == best_gain && row[u] > row[best]) {
                    best = u;
                    best_gain = g;
                }
            }
            Decision::Assign(best)
        }
    }
}

/// Threshold expert: observe the first `phase_length` arrivals (1-based
/// `step`), recording the largest weight seen, then accept the best
/// available edge whenever it strictly beats that threshold.
pub fn osm_decide(
    shadow: &MatchLedger,
    row: &[f64],
    step: usize,
    phase_length: usize,
    threshold: f64,
) -> (Decision, f64) {
    if step <= phase_length {
        let row_max = row.iter().copied().fold(0.0, f64::max);
        return (Decision::Skip, threshold.max(row_max));
    }
    match best_available(shadow, row) {
        Some(u) if row[u] > threshold => (Decision::Assign(u), threshold),
        _ => (Decision::Skip, threshold),
    }
}

/// An expert together with its private state and shadow ledger.
#[derive(Clone, Debug)]
pub struct Expert {
    kind: ExpertKind,
    phase_length: usize,
    threshold: f64,
    step: usize,
    shadow: MatchLedger,
}

impl Expert {
    pub fn new(kind: ExpertKind, setting: Setting, capacities: &[u32], num_online: usize) -> Self {
        Expert {
            kind,
            phase_length: osm_phase_length(num_online),
            threshold: 0.0,
            step: 0,
            shadow: MatchLedger::new(setting, capacities),
        }
    }

    pub fn kind(&self) -> ExpertKind {
        self.kind
    }

    pub fn shadow(&self) -> &MatchLedger {
        &self.shadow
    }

    /// Decides on the next arrival and applies the decision to the shadow.
    pub fn advance(&mut self, row: &[f64]) -> Result<Decision> {
        self.step += 1;
        let decision = match self.kind {
            ExpertKind::Greedy => greedy_decide(&self.shadow, row),
            ExpertKind::Osm => {
                let (d, t) = osm_decide(&self.shadow, row, self.step, self.phase_length, self.threshold);
                self.threshold = t;
                d
            }
        };
        self.shadow.apply(decision, row)?;
        Ok(decision)
    }
}

/// Runs an expert alone over all arrivals and returns its final ledger.
pub fn run_expert(
    kind: ExpertKind,
    setting: Setting,
    capacities: &[u32],
    arrivals: &[Vec<f64>],
) -> Result<MatchLedger> {
    let mut expert = Expert::new(kind, setting, capacities, arrivals.len());
    for row in arrivals {
        expert.advance(row)?;
    }
    Ok(expert.shadow)
}
