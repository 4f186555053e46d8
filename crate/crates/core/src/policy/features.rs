//! Per-pair input features for the scoring network.
//!
//! Layout of a [`FeatureVector`] for offline item `u` at arrival `v`:
//!
//! | index | feature |
//! |-------|---------|
//! | 0 | current weight `w_uv` |
//! | 1 | remaining capacity of `u` as a fraction of `c_u` |
//! | 2, 3 | mean and population variance of `w_uv'` over past arrivals |
//! | 4 | fraction of past arrivals with `w_uv' > 0` |
//! | 5 | `v / |V|` (1-based `v`) |
//! | 6 | fraction of offline items with positive weight in the current row |
//! | 7..=10 | max, min, mean, population variance of weights matched to `u` |
//! | 11 | fraction of offline items at or above capacity |
//! | 12 | fraction of past arrivals that were skipped |
//! | 13 | cumulative reward divided by `|U|` |
//!
//! Statistics of an empty set are 0. "Past" means arrivals `1..v-1` of the
//! actual run.

use crate::ledger::{Decision, MatchLedger};

pub const FEATURE_DIM: usize = 14;
pub const FEATURE_SPEC_VERSION: &str = "matchlab-features-v1";

pub type FeatureVector = [f64; FEATURE_DIM];

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).max(0.0)
        }
    }
}

/// History of the actual run needed by the features.
#[derive(Clone, Debug, Default)]
pub struct RunStats {
    num_online: usize,
    seen: usize,
    skips: usize,
    weights: Vec<RunningMoments>,
    positive: Vec<usize>,
}

impl RunStats {
    pub fn new(num_offline: usize, num_online: usize) -> Self {
        RunStats {
            num_online,
            seen: 0,
            skips: 0,
            weights: vec![RunningMoments::default(); num_offline],
            positive: vec![0; num_offline],
        }
    }

    /// Records a finished arrival.
    pub fn observe(&mut self, row: &[f64], decision: Decision) {
        self.seen += 1;
        if decision == Decision::Skip {
            self.skips += 1;
        }
        for (u, &w) in row.iter().enumerate() {
            self.weights[u].push(w);
            if w > 0.0 {
                self.positive[u] += 1;
            }
        }
    }

    pub fn seen(&self) -> usize {
        self.seen
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// (max, min, mean, population variance), all zero for an empty slice.
fn summary(xs: &[f64]) -> [f64; 4] {
    if xs.is_empty() {
        return [0.0; 4];
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    [max, min, mean, var]
}

/// Features shared by every item at this arrival: (step fraction, row
/// density, at-capacity fraction, skip ratio, normalized reward).
fn shared_features(stats: &RunStats, ledger: &MatchLedger, row: &[f64]) -> [f64; 5] {
    let n_off = ledger.num_offline();
    let step = stats.seen + 1;
    let positive_now = row.iter().filter(|&&w| w > 0.0).count();
    let full = (0..n_off).filter(|&u| ledger.is_full(u)).count();
    [
        ratio(step, stats.num_online),
        ratio(positive_now, n_off),
        ratio(full, n_off),
        ratio(stats.skips, stats.seen),
        ledger.reward() / n_off as f64,
    ]
}

fn item_features(stats: &RunStats, ledger: &MatchLedger, u: usize, row: &[f64], shared: &[f64; 5]) -> FeatureVector {
    let c = ledger.capacity(u);
    let remaining = c.saturating_sub(ledger.count(u));
    let [mmax, mmin, mmean, mvar] = summary(ledger.matched(u));
    let hist = &stats.weights[u];
    [
        row[u],
        ratio(remaining, c),
        hist.mean(),
        hist.variance(),
        ratio(stats.positive[u], stats.seen),
        shared[0],
        shared[1],
        mmax,
        mmin,
        mmean,
        mvar,
        shared[2],
        shared[3],
        shared[4],
    ]
}

/// Features of pair `(u, current arrival)`.
pub fn extract_features(stats: &RunStats, ledger: &MatchLedger, u: usize, row: &[f64]) -> FeatureVector {
    let shared = shared_features(stats, ledger, row);
    item_features(stats, ledger, u, row, &shared)
}

/// Features for every offline item at the current arrival.
pub fn extract_all(stats: &RunStats, ledger: &MatchLedger, row: &[f64]) -> Vec<FeatureVector> {
    let shared = shared_features(stats, ledger, row);
    (0..ledger.num_offline())
        .map(|u| item_features(stats, ledger, u, row, &shared))
        .collect()
}
