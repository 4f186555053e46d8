//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use matchlab::harness::{evaluate, Algo, EvalConfig};
use matchlab::instance::{generate_batch, GeneratorConfig, ProblemInstance};
use matchlab::oracle::{opt_exhaustive, opt_flow};
use matchlab::policy::train::{rollout, train, TrainConfig};
use matchlab::policy::{PolicyParams, PolicyProposer};
use matchlab::rng::SeededRng;
use matchlab::switching::{run_episode, LightestEdge, Proposer, ScriptedProposer, SwitchRule};
use matchlab::{Decision, ExpertKind, Setting, SwitchConfig, WeightCap};

type Outcome = Result<String, String>;

const SETTINGS: [Setting; 2] = [Setting::NoFreeDisposal, Setting::FreeDisposal];

fn fuzz_instances(seed: u64, count: usize) -> Vec<ProblemInstance> {
    let mut rng = SeededRng::new(seed);
    (0..count)
        .map(|_| common::random_instance(&mut rng, (2, 10), (5, 60), 3, 0.3))
        .collect()
}

fn quick_policy(setting: Setting, seed: u64) -> PolicyParams {
    let cfg = GeneratorConfig {
        num_offline: 5,
        num_online: 20,
        capacity_range: (1, 3),
        sparsity: 0.3,
        seed,
        ..GeneratorConfig::default()
    };
    let tcfg = TrainConfig {
        epochs: 10,
        batch_size: 20,
        learning_rate: 1e-2,
        rho: 0.5,
        setting,
        seed,
        dims: vec![14, 16, 16, 1],
        ..TrainConfig::default()
    };
    train(&generate_batch(&cfg, 50).unwrap(), &tcfg).unwrap().params
}

fn robustness_fuzz() -> Outcome {
    let instances = fuzz_instances(101, 1000);
    let mut rng = SeededRng::new(102);
    let random_policy = PolicyParams::init(&[14, 32, 32, 1], &mut rng);
    let trained = [quick_policy(Setting::NoFreeDisposal, 103), quick_policy(Setting::FreeDisposal, 104)];
    let mut episodes = 0usize;
    let mut violations = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let expert = if i % 2 == 0 { ExpertKind::Greedy } else { ExpertKind::Osm };
        for (s, &setting) in SETTINGS.iter().enumerate() {
            for rho in [0.0, 0.25, 0.5, 0.75, 1.0] {
                for b in [0.0, 1.0] {
                    let cfg = SwitchConfig::new(rho, b, setting).unwrap();
                    let mut proposers: [Box<dyn Proposer>; 3] = [
                        Box::new(PolicyProposer::new(&random_policy)),
                        Box::new(LightestEdge),
                        Box::new(PolicyProposer::new(&trained[s])),
                    ];
                    for p in proposers.iter_mut() {
                        let trace = run_episode(inst, p.as_mut(), expert, &cfg).map_err(|e| e.to_string())?;
                        for v in common::audit_trace(inst, &trace) {
                            violations.push(format!("instance {i}, {setting:?}, rho {rho}, B {b}: {v}"));
                        }
                        episodes += 1;
                    }
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(format!("{} instances, {episodes} episodes, 0 violations", instances.len()))
    } else {
        Err(format!("{} violations, first: {}", violations.len(), violations[0]))
    }
}

fn hedging_necessity() -> Outcome {
    let inst = ProblemInstance {
        num_offline: 2,
        capacities: vec![1, 1],
        weight_caps: vec![WeightCap::Finite(10.0); 2],
        arrivals: vec![vec![1.0, 0.5], vec![0.0, 10.0]],
    };
    let script = || ScriptedProposer::new(vec![Decision::Assign(1), Decision::Assign(1)]);
    let hedged = SwitchConfig::new(0.5, 0.0, Setting::NoFreeDisposal).unwrap();
    let naive = hedged.with_rule(SwitchRule::Naive);
    let n = run_episode(&inst, &mut script(), ExpertKind::Greedy, &naive).map_err(|e| e.to_string())?;
    let h = run_episode(&inst, &mut script(), ExpertKind::Greedy, &hedged).map_err(|e| e.to_string())?;
    let need = 0.5 * n.expert_reward;
    let detail = format!(
        "expert {}, naive R = {} (needs {need}), hedged R = {}",
        n.expert_reward, n.reward, h.reward
    );
    if n.reward < need - 1e-9 && h.reward >= 0.5 * h.expert_reward - 1e-9 && common::audit_trace(&inst, &h).is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unbounded_conservatism() -> Outcome {
    let instances: Vec<_> = fuzz_instances(201, 150).iter().map(|i| i.with_unbounded_caps()).collect();
    let policy = PolicyParams::init(&[14, 32, 32, 1], &mut SeededRng::new(202));
    let cfg = SwitchConfig::new(0.5, 0.0, Setting::NoFreeDisposal).unwrap();
    let mut episodes = 0;
    let mut steps = 0;
    for (i, inst) in instances.iter().enumerate() {
        let mut proposers: [Box<dyn Proposer>; 2] = [Box::new(LightestEdge), Box::new(PolicyProposer::new(&policy))];
        for p in proposers.iter_mut() {
            let trace = run_episode(inst, p.as_mut(), ExpertKind::Greedy, &cfg).map_err(|e| e.to_string())?;
            let mut ours = vec![0i64; inst.num_offline];
            let mut theirs = vec![0i64; inst.num_offline];
            for (v, s) in trace.steps.iter().enumerate() {
                if let Decision::Assign(u) = s.decision {
                    ours[u] += 1;
                }
                if let Decision::Assign(u) = s.expert_decision {
                    theirs[u] += 1;
                }
                if let Some(u) = (0..inst.num_offline).find(|&u| ours[u] > theirs[u]) {
                    return Err(format!("instance {i}, step {v}: item {u} holds {} > {}", ours[u], theirs[u]));
                }
                steps += 1;
            }
            episodes += 1;
        }
    }
    Ok(format!("{episodes} episodes, {steps} steps, 0 violations"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = SeededRng::new(301);
    let mut worst = 0.0f64;
    for k in 0..300 {
        let inst = common::random_instance(&mut rng, (1, 4), (1, 7), 2, 0.2);
        let a = opt_exhaustive(&inst).map_err(|e| e.to_string())?.value;
        let b = opt_flow(&inst).value;
        worst = worst.max((a - b).abs());
        if (a - b).abs() > 1e-9 {
            return Err(format!("instance {k}: exhaustive {a}, flow {b}"));
        }
    }
    for k in 0..150 {
        let inst = common::random_instance(&mut rng, (1, 3), (1, 5), 2, 0.2);
        let a = opt_exhaustive(&inst).map_err(|e| e.to_string())?.value;
        let b = common::brute_opt_fd(&inst);
        worst = worst.max((a - b).abs());
        if (a - b).abs() > 1e-9 {
            return Err(format!("free-disposal instance {k}: exhaustive {a}, brute force {b}"));
        }
    }
    Ok(format!("300 flow and 150 free-disposal comparisons, max diff {worst:.1e}"))
}

fn gradient_fidelity() -> Outcome {
    let dims = [14, 8, 8, 1];
    let cfg = GeneratorConfig {
        num_offline: 4,
        num_online: 15,
        capacity_range: (1, 2),
        sparsity: 0.3,
        seed: 401,
        ..GeneratorConfig::default()
    };
    let instances = generate_batch(&cfg, 200).unwrap();
    let mut rng = SeededRng::new(402);
    let (mut accepted, mut skipped, mut params_checked) = (0, 0, 0);
    for (k, inst) in instances.iter().enumerate() {
        if accepted == 25 {
            break;
        }
        let setting = SETTINGS[k % 2];
        let rho = rng.uniform();
        let temperature = rng.uniform_in(0.1, 2.0);
        let switch = SwitchConfig::new(rho, 0.0, setting).unwrap();
        let params = common::random_params(&dims, &mut rng);
        let traj = rollout(inst, &params, ExpertKind::Greedy, &switch, temperature, &mut rng).map_err(|e| e.to_string())?;
        if common::kink_distance(&params, &traj) < 1e-3 {
            skipped += 1;
            continue;
        }
        let (bad, n) = common::gradient_mismatches(&params, &traj, 1e-4);
        if let Some(first) = bad.first() {
            return Err(format!("configuration {k}: {} mismatches, first {first}", bad.len()));
        }
        accepted += 1;
        params_checked += n;
    }
    if accepted < 20 {
        return Err(format!("only {accepted} configurations away from ReLU kinks"));
    }
    Ok(format!(
        "{accepted} configurations, {params_checked} partials within 1e-3 ({skipped} near-kink draws skipped)"
    ))
}

fn trend_distribution(seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        num_offline: 6,
        num_online: 30,
        capacity_range: (1, 2),
        weight_low: 0.0,
        weight_high: 1.0,
        sparsity: 0.3,
        seed,
    }
}

fn trend_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 50,
        batch_size: 100,
        learning_rate: 1e-2,
        rho: 0.4,
        seed: 3,
        ..TrainConfig::default()
    }
}

fn training_trend(trained: &mut Option<PolicyParams>) -> Outcome {
    let train_set = generate_batch(&trend_distribution(1), 100).unwrap();
    let test_set = generate_batch(&trend_distribution(2), 300).unwrap();
    let cfg = trend_train_config();
    let init = PolicyParams::init(&cfg.dims, &mut SeededRng::new(cfg.seed));
    let outcome = train(&train_set, &cfg).map_err(|e| e.to_string())?;
    let ecfg = EvalConfig {
        rho: 0.4,
        ..EvalConfig::default()
    };
    let avg = |params: &PolicyParams, algo: Algo| -> Result<f64, String> {
        let r = evaluate(&test_set, &[algo], Some(params), &ecfg).map_err(|e| e.to_string())?;
        Ok(r.algorithms[0].avg)
    };
    let before = avg(&init, Algo::Lomar)?;
    let after = avg(&outcome.params, Algo::Lomar)?;
    let greedy = avg(&init, Algo::Greedy)?;
    *trained = Some(outcome.params);
    let gain = after / before - 1.0;
    let detail = format!(
        "LOMAR AVG {before:.4} -> {after:.4} ({:+.1}%), Greedy AVG {greedy:.4}",
        100.0 * gain
    );
    if gain >= 0.05 && after >= greedy {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn switching_ordering(trained: Option<&PolicyParams>) -> Outcome {
    let params = match trained {
        Some(p) => p.clone(),
        None => train(&generate_batch(&trend_distribution(1), 100).unwrap(), &trend_train_config())
            .map_err(|e| e.to_string())?
            .params,
    };
    let corrupted = params.negated();
    let test_set = generate_batch(&trend_distribution(4), 500).unwrap();
    let ecfg = EvalConfig {
        rho: 0.8,
        ..EvalConfig::default()
    };
    let r = evaluate(&test_set, &[Algo::Lomar, Algo::Drl], Some(&corrupted), &ecfg).map_err(|e| e.to_string())?;
    let (safe, raw) = (r.algorithms[0].cr, r.algorithms[1].cr);
    let detail = format!(
        "corrupted policy CR: rho 0.8 = {safe:?}, rho 0 = {raw:?} (AVG {:.4} vs {:.4})",
        r.algorithms[0].avg, r.algorithms[1].avg
    );
    match (safe, raw) {
        (Some(s), Some(d)) if s >= d => Ok(detail),
        _ => Err(detail),
    }
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_matchlab"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for run in 0..2 {
        let d = dir.path().join(format!("run{run}"));
        fs::create_dir(&d).map_err(|e| e.to_string())?;
        cli(&d, &["gen", "--num-offline", "5", "--num-online", "20", "--count", "40", "--seed", "7", "--sparsity", "0.3", "--wlow", "0", "--whigh", "1", "--out", "i.jsonl"])?;
        cli(&d, &["train", "--instances", "i.jsonl", "--rho", "0.4", "--b", "0", "--setting", "nfd", "--expert", "greedy", "--epochs", "4", "--batch", "16", "--lr", "0.01", "--t0", "1", "--t-decay", "0.9", "--t-floor", "0.05", "--seed", "8", "--hidden", "16,16", "--out", "p.json"])?;
        cli(&d, &["run", "--instances", "i.jsonl", "--algo", "lomar,drl,drl-os,greedy,osm,opt", "--policy", "p.json", "--rho", "0.5", "--setting", "nfd", "--expert", "greedy", "--seed", "9", "--out", "r.json"])?;
        outputs.push(
            ["i.jsonl", "p.json", "r.json"]
                .iter()
                .map(|f| fs::read(d.join(f)).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?,
        );
    }
    let names = ["gen", "train", "run"];
    let differing: Vec<&str> = (0..3).filter(|&k| outputs[0][k] != outputs[1][k]).map(|k| names[k]).collect();
    if differing.is_empty() {
        Ok("gen, train and run outputs byte-identical across two invocations".into())
    } else {
        Err(format!("outputs differ for {differing:?}"))
    }
}

fn main() -> ExitCode {
    let mut trained = None;
    let mut failures = 0;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} [{name}]: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {id} [{name}]: FAIL ({secs:.1}s) {detail}");
            }
        }
    };
    report(1, "robustness fuzz", &mut robustness_fuzz);
    report(2, "hedging necessity", &mut hedging_necessity);
    report(3, "unbounded-cap conservatism", &mut unbounded_conservatism);
    report(4, "oracle equivalence", &mut oracle_equivalence);
    report(5, "gradient fidelity", &mut gradient_fidelity);
    report(6, "training trend", &mut || training_trend(&mut trained));
    report(7, "switching ordering", &mut || switching_ordering(trained.as_ref()));
    report(8, "determinism", &mut determinism);
    if failures == 0 {
        println!("acceptance: all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
