//! Test-side reference implementations, kept independent of the library's
//! ledger and switching code.
#![allow(dead_code)]

use matchlab::instance::{generate_instance, GeneratorConfig, ProblemInstance, WeightCap};
use matchlab::rng::SeededRng;
use matchlab::switching::RunTrace;
use matchlab::{Decision, Setting};

pub const TOL: f64 = 1e-9;

/// Random instance with `|U|` and `|V|` drawn from the given inclusive ranges.
pub fn random_instance(
    rng: &mut SeededRng,
    offline: (usize, usize),
    online: (usize, usize),
    cap_max: u32,
    sparsity: f64,
) -> ProblemInstance {
    let pick = |rng: &mut SeededRng, (lo, hi): (usize, usize)| lo + rng.below((hi - lo + 1) as u64) as usize;
    let cfg = GeneratorConfig {
        num_offline: pick(rng, offline),
        num_online: pick(rng, online),
        capacity_range: (1, cap_max),
        weight_low: 0.0,
        weight_high: 1.0,
        sparsity,
        seed: rng.next_u64(),
    };
    generate_instance(&cfg).unwrap()
}

/// Plain per-item lists of matched weights.
#[derive(Clone, Debug)]
pub struct Replay {
    pub fd: bool,
    pub caps: Vec<usize>,
    pub matched: Vec<Vec<f64>>,
}

impl Replay {
    pub fn new(setting: Setting, capacities: &[u32]) -> Self {
        Replay {
            fd: setting == Setting::FreeDisposal,
            caps: capacities.iter().map(|&c| c as usize).collect(),
            matched: vec![Vec::new(); capacities.len()],
        }
    }

    pub fn push(&mut self, d: Decision, row: &[f64]) -> Result<(), String> {
        if let Decision::Assign(u) = d {
            if !self.fd && self.matched[u].len() >= self.caps[u] {
                return Err(format!("item {u} over capacity"));
            }
            self.matched[u].push(row[u]);
        }
        Ok(())
    }

    /// Best `c_u` weights of item `u`, zero padded, increasing.
    pub fn top(&self, u: usize) -> Vec<f64> {
        let mut m = self.matched[u].clone();
        m.sort_by(|a, b| b.partial_cmp(a).unwrap());
        m.resize(self.caps[u], 0.0);
        m.truncate(self.caps[u]);
        m.reverse();
        m
    }

    pub fn reward(&self) -> f64 {
        (0..self.caps.len())
            .map(|u| if self.fd { self.top(u).iter().sum() } else { self.matched[u].iter().sum::<f64>() })
            .sum()
    }
}

/// Reservation term of the robustness inequality between two replays.
pub fn reservation(ours: &Replay, theirs: &Replay, caps: &[WeightCap]) -> f64 {
    let mut total = 0.0;
    for (u, cap) in caps.iter().enumerate() {
        if ours.fd {
            let (a, b) = (ours.top(u), theirs.top(u));
            let mut run = 0.0;
            let mut best = 0.0f64;
            for i in 0..a.len() {
                run += a[i] - b[i];
                best = best.max(run);
            }
            total += best;
        } else {
            let excess = ours.matched[u].len() as i64 - theirs.matched[u].len() as i64;
            if excess > 0 {
                match *cap {
                    WeightCap::Finite(w) => total += excess as f64 * w,
                    WeightCap::Unbounded => return f64::INFINITY,
                }
            }
        }
    }
    total
}

/// Replays a trace and returns every violated robustness inequality.
pub fn audit_trace(instance: &ProblemInstance, trace: &RunTrace) -> Vec<String> {
    let cfg = &trace.config;
    let mut ours = Replay::new(cfg.setting, &instance.capacities);
    let mut theirs = Replay::new(cfg.setting, &instance.capacities);
    let mut bad = Vec::new();
    for (v, (row, step)) in instance.arrivals.iter().zip(&trace.steps).enumerate() {
        if let Err(e) = ours.push(step.decision, row) {
            bad.push(format!("step {v}: {e}"));
            return bad;
        }
        theirs.push(step.expert_decision, row).unwrap();
        let r = ours.reward();
        let need = if cfg.rho == 0.0 {
            -cfg.budget_b
        } else {
            cfg.rho * (theirs.reward() + reservation(&ours, &theirs, &instance.weight_caps)) - cfg.budget_b
        };
        if r < need - TOL {
            bad.push(format!("step {v}: reward {r} < {need}"));
        }
    }
    let (r, re) = (ours.reward(), theirs.reward());
    if (r - trace.reward).abs() > 1e-9 || (re - trace.expert_reward).abs() > 1e-9 {
        bad.push(format!("reward mismatch: replay {r}/{re}, trace {}/{}", trace.reward, trace.expert_reward));
    }
    if r < cfg.rho * re - cfg.budget_b - TOL {
        bad.push(format!("final reward {r} < {} * {re} - {}", cfg.rho, cfg.budget_b));
    }
    bad
}

/// Offline optimum by enumerating every assignment, honouring capacities.
pub fn brute_opt(instance: &ProblemInstance) -> f64 {
    fn go(inst: &ProblemInstance, v: usize, counts: &mut [u32]) -> f64 {
        if v == inst.arrivals.len() {
            return 0.0;
        }
        let mut best = go(inst, v + 1, counts);
        for u in 0..inst.num_offline {
            if counts[u] < inst.capacities[u] {
                counts[u] += 1;
                best = best.max(inst.arrivals[v][u] + go(inst, v + 1, counts));
                counts[u] -= 1;
            }
        }
        best
    }
    go(instance, 0, &mut vec![0; instance.num_offline])
}

/// Free-disposal offline optimum: every arrival may go anywhere and each
/// item keeps its best `c_u` weights.
pub fn brute_opt_fd(instance: &ProblemInstance) -> f64 {
    fn go(inst: &ProblemInstance, v: usize, rep: &mut Replay) -> f64 {
        if v == inst.arrivals.len() {
            return rep.reward();
        }
        let mut best = go(inst, v + 1, rep);
        for u in 0..inst.num_offline {
            rep.matched[u].push(inst.arrivals[v][u]);
            best = best.max(go(inst, v + 1, rep));
            rep.matched[u].pop();
        }
        best
    }
    go(instance, 0, &mut Replay::new(Setting::FreeDisposal, &instance.capacities))
}

/// Random network with nonzero biases, so no unit sits exactly on a ReLU
/// kink (zero-bias layers map dead inputs to an exact 0 pre-activation).
pub fn random_params(dims: &[usize], rng: &mut SeededRng) -> matchlab::policy::PolicyParams {
    let mut p = matchlab::policy::PolicyParams::init(dims, rng);
    for b in p.biases.iter_mut().flatten() {
        *b = rng.uniform_in(-0.1, 0.1);
    }
    p
}

/// Smallest `|pre-activation|` of any hidden unit, and smallest gap between
/// the two best option scores, over every recorded step. Central differences
/// are only meaningful when both are well above the step size.
pub fn kink_distance(params: &matchlab::policy::PolicyParams, traj: &matchlab::policy::gradient::Trajectory) -> f64 {
    let mut nearest = f64::INFINITY;
    for step in &traj.steps {
        let mut scores = vec![0.0];
        for ((f, &w), &ok) in step.features.iter().zip(&step.row).zip(&step.available) {
            if !ok {
                continue;
            }
            let mut x: Vec<f64> = f.to_vec();
            let last = params.dims.len() - 2;
            for l in 0..=last {
                let n_in = params.dims[l];
                let z: Vec<f64> = (0..params.dims[l + 1])
                    .map(|o| {
                        params.biases[l][o]
                            + params.weights[l][o * n_in..(o + 1) * n_in].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
                    })
                    .collect();
                if l < last {
                    nearest = z.iter().fold(nearest, |m, v| m.min(v.abs()));
                    x = z.iter().map(|v| v.max(0.0)).collect();
                } else {
                    scores.push(w - z[0]);
                }
            }
        }
        scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if scores.len() > 1 {
            nearest = nearest.min(scores[0] - scores[1]);
        }
    }
    nearest
}

/// Largest mismatch between the analytic reward-scaled log-probability
/// gradient and central differences, as `(failures, checked)`.
pub fn gradient_mismatches(
    params: &matchlab::policy::PolicyParams,
    traj: &matchlab::policy::gradient::Trajectory,
    h: f64,
) -> (Vec<String>, usize) {
    use matchlab::policy::gradient::{log_prob_gradient, trajectory_log_prob};
    let analytic = log_prob_gradient(params, traj).unwrap().flat();
    let base = params.flat();
    let mut probe = params.clone();
    let mut bad = Vec::new();
    for i in 0..base.len() {
        let mut x = base.clone();
        x[i] = base[i] + h;
        probe.set_flat(&x);
        let up = trajectory_log_prob(&probe, traj).unwrap();
        x[i] = base[i] - h;
        probe.set_flat(&x);
        let down = trajectory_log_prob(&probe, traj).unwrap();
        let numeric = traj.total_reward * (up - down) / (2.0 * h);
        let a = analytic[i];
        let err = (a - numeric).abs();
        if err > 1e-8 && err > 1e-3 * a.abs().max(numeric.abs()) {
            bad.push(format!("param {i}: analytic {a}, numeric {numeric}"));
        }
    }
    (bad, base.len())
}
