//! Problem instances: generation, validation and JSON-lines persistence.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Upper bound on the weight any online item can bring to an offline item.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum WeightCap {
    Finite(f64),
    Unbounded,
}

impl WeightCap {
    pub fn value(self) -> f64 {
        match self {
            WeightCap::Finite(w) => w,
            WeightCap::Unbounded => f64::INFINITY,
        }
    }
}

impl From<Option<f64>> for WeightCap {
    fn from(v: Option<f64>) -> Self {
        v.map_or(WeightCap::Unbounded, WeightCap::Finite)
    }
}

impl From<WeightCap> for Option<f64> {
    fn from(c: WeightCap) -> Self {
        match c {
            WeightCap::Finite(w) => Some(w),
            WeightCap::Unbounded => None,
        }
    }
}

/// One bipartite matching instance: offline items with capacities and
/// per-item weight caps, plus the ordered arrival rows.
///
/// `arrivals[v][u]` is the weight of matching arrival `v` to offline item `u`;
/// a weight of zero means there is no edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub num_offline: usize,
    pub capacities: Vec<u32>,
    #[serde(rename = "w_max")]
    pub weight_caps: Vec<WeightCap>,
    pub arrivals: Vec<Vec<f64>>,
}

impl ProblemInstance {
    pub fn num_online(&self) -> usize {
        self.arrivals.len()
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.arrivals[v][u]
    }

    /// Copy of this instance with every weight cap set to `Unbounded`.
    pub fn with_unbounded_caps(&self) -> Self {
        ProblemInstance {
            weight_caps: vec![WeightCap::Unbounded; self.num_offline],
            ..self.clone()
        }
    }
}

/// Checks every instance invariant and reports all violations.
pub fn validate(instance: &ProblemInstance) -> std::result::Result<(), Vec<String>> {
    let n = instance.num_offline;
    let mut violations = Vec::new();
    if instance.capacities.len() != n {
        violations.push(format!(
            "capacities has length {} but num_offline is {n}",
            instance.capacities.len()
        ));
    }
    if instance.weight_caps.len() != n {
        violations.push(format!(
            "w_max has length {} but num_offline is {n}",
            instance.weight_caps.len()
        ));
    }
    for (u, &c) in instance.capacities.iter().enumerate() {
        if c < 1 {
            violations.push(format!("capacity must be ≥ 1 at index {u}"));
        }
    }
    for (u, cap) in instance.weight_caps.iter().enumerate() {
        if let WeightCap::Finite(w) = *cap {
            if !w.is_finite() || w < 0.0 {
                violations.push(format!("w_max must be finite and non-negative at index {u}"));
            }
        }
    }
    for (v, row) in instance.arrivals.iter().enumerate() {
        if row.len() != n {
            violations.push(format!(
                "arrival {v} has {} weights but num_offline is {n}",
                row.len()
            ));
        }
        for (u, &w) in row.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                violations.push(format!(
                    "weight at (u={u}, v={v}) must be finite and non-negative, got {w}"
                ));
                continue;
            }
            if let Some(WeightCap::Finite(cap)) = instance.weight_caps.get(u) {
                if w > *cap {
                    violations.push(format!("weight {w} at (u={u}, v={v}) exceeds cap {cap}"));
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Parameters of the synthetic instance generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub num_offline: usize,
    pub num_online: usize,
    /// Inclusive capacity interval.
    pub capacity_range: (u32, u32),
    pub weight_low: f64,
    pub weight_high: f64,
    /// Probability that an edge weight is forced to zero.
    pub sparsity: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            num_offline: 6,
            num_online: 30,
            capacity_range: (1, 3),
            weight_low: 0.0,
            weight_high: 1.0,
            sparsity: 0.0,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, message: &str| {
            Err(Error::Config {
                field,
                message: message.to_string(),
            })
        };
        if self.num_offline == 0 {
            return bad("num_offline", "must be at least 1");
        }
        let (lo, hi) = self.capacity_range;
        if lo < 1 {
            return bad("capacity_range", "lower bound must be at least 1");
        }
        if lo > hi {
            return bad("capacity_range", "lower bound exceeds upper bound");
        }
        if !self.weight_low.is_finite() || self.weight_low < 0.0 {
            return bad("weight_low", "must be finite and ≥ 0");
        }
        if !self.weight_high.is_finite() || self.weight_low > self.weight_high {
            return bad("weight_high", "must be finite and ≥ weight_low");
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return bad("sparsity", "must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Generates one instance from `config.seed`.
///
/// Draw order: one capacity per offline item (`lo + below(hi - lo + 1)`),
/// then for each arrival and each offline item a sparsity coin `uniform()`
/// followed by a weight `low + (high - low) * uniform()`. The weight is kept
/// unless `coin < sparsity`, in which case it is replaced by zero. Both draws
/// are always consumed. Every weight cap is `weight_high`.
pub fn generate_instance(config: &GeneratorConfig) -> Result<ProblemInstance> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    Ok(draw_instance(config, &mut rng))
}

/// Generates `count` instances from one continuous random stream; the first
/// equals `generate_instance(config)`.
pub fn generate_batch(config: &GeneratorConfig, count: usize) -> Result<Vec<ProblemInstance>> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    Ok((0..count).map(|_| draw_instance(config, &mut rng)).collect())
}

fn draw_instance(config: &GeneratorConfig, rng: &mut SeededRng) -> ProblemInstance {
    let (lo, hi) = config.capacity_range;
    let span = u64::from(hi - lo) + 1;
    let capacities = (0..config.num_offline)
        .map(|_| lo + rng.below(span) as u32)
        .collect();
    let arrivals = (0..config.num_online)
        .map(|_| {
            (0..config.num_offline)
                .map(|_| {
                    let coin = rng.uniform();
                    let w = rng.uniform_in(config.weight_low, config.weight_high);
                    if coin < config.sparsity {
                        0.0
                    } else {
                        w
                    }
                })
                .collect()
        })
        .collect();
    ProblemInstance {
        num_offline: config.num_offline,
        capacities,
        weight_caps: vec![WeightCap::Finite(config.weight_high); config.num_offline],
        arrivals,
    }
}

pub fn to_jsonl_line(instance: &ProblemInstance) -> Result<String> {
    Ok(serde_json::to_string(instance)?)
}

pub fn write_instances<W: Write>(mut out: W, instances: &[ProblemInstance]) -> Result<()> {
    for inst in instances {
        writeln!(out, "{}", to_jsonl_line(inst)?)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses JSON-lines; blank lines are ignored. Line numbers are 1-based.
pub fn read_instances<R: BufRead>(input: R) -> Result<Vec<ProblemInstance>> {
    let mut instances = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let inst: ProblemInstance = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        validate(&inst).map_err(|violations| Error::Validation {
            line: Some(lineno),
            violations,
        })?;
        instances.push(inst);
    }
    Ok(instances)
}

pub fn save_instances(path: &Path, instances: &[ProblemInstance]) -> Result<()> {
    write_instances(BufWriter::new(File::create(path)?), instances)
}

pub fn load_instances(path: &Path) -> Result<Vec<ProblemInstance>> {
    read_instances(BufReader::new(File::open(path)?))
}

/// Saves then reloads `instances` through `path`.
pub fn persist_round_trip(instances: &[ProblemInstance], path: &Path) -> Result<Vec<ProblemInstance>> {
    save_instances(path, instances)?;
    load_instances(path)
}

impl fmt::Display for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "instance |U|={} |V|={} capacities={:?}",
            self.num_offline,
            self.num_online(),
            self.capacities
        )
    }
}
