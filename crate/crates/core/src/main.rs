use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use matchlab::harness::{evaluate, parse_report, report_render, Algo, CrReference, EvalConfig, ReportFormat};
use matchlab::instance::{generate_batch, load_instances, save_instances, GeneratorConfig};
use matchlab::policy::train::{train, TrainConfig};
use matchlab::policy::{PolicyParams, FEATURE_DIM};
use matchlab::{Error, ExpertKind, Setting};

#[derive(Parser)]
#[command(name = "matchlab", version, about = "Robust learning-augmented online bipartite matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Nfd,
    Fd,
}

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Self {
        match s {
            SettingArg::Nfd => Setting::NoFreeDisposal,
            SettingArg::Fd => Setting::FreeDisposal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpertArg {
    Greedy,
    Osm,
}

impl From<ExpertArg> for ExpertKind {
    fn from(e: ExpertArg) -> Self {
        match e {
            ExpertArg::Greedy => ExpertKind::Greedy,
            ExpertArg::Osm => ExpertKind::Osm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CrArg {
    Opt,
    Expert,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic instances as JSON lines.
    Gen {
        #[arg(long)]
        num_offline: usize,
        #[arg(long)]
        num_online: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        sparsity: f64,
        #[arg(long, default_value_t = 0.0)]
        wlow: f64,
        #[arg(long, default_value_t = 1.0)]
        whigh: f64,
        #[arg(long, default_value_t = 1)]
        cap_min: u32,
        #[arg(long, default_value_t = 3)]
        cap_max: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a scoring policy with smoothed switching.
    Train {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long, value_enum, default_value = "nfd")]
        setting: SettingArg,
        #[arg(long, value_enum, default_value = "greedy")]
        expert: ExpertArg,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 100)]
        batch: usize,
        #[arg(long, default_value_t = 1e-2)]
        lr: f64,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        #[arg(long, default_value_t = 0.99)]
        t_decay: f64,
        #[arg(long, default_value_t = 0.05)]
        t_floor: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hidden layer widths.
        #[arg(long, value_delimiter = ',', default_value = "100,100,100")]
        hidden: Vec<usize>,
        /// Constant reward baseline (off by default).
        #[arg(long)]
        baseline: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate algorithms on an instance file.
    Run {
        #[arg(long)]
        instances: PathBuf,
        /// Algorithms to evaluate, comma separated or repeated.
        #[arg(long, value_delimiter = ',', required = true)]
        algo: Vec<String>,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long, value_enum, default_value = "nfd")]
        setting: SettingArg,
        #[arg(long, value_enum, default_value = "greedy")]
        expert: ExpertArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "opt")]
        cr_vs: CrArg,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render a JSON report.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen {
            num_offline,
            num_online,
            count,
            seed,
            sparsity,
            wlow,
            whigh,
            cap_min,
            cap_max,
            out,
        } => {
            let cfg = GeneratorConfig {
                num_offline,
                num_online,
                capacity_range: (cap_min, cap_max),
                weight_low: wlow,
                weight_high: whigh,
                sparsity,
                seed,
            };
            save_instances(&out, &generate_batch(&cfg, count)?)
                .with_context(|| format!("writing {}", out.display()))
        }
        Command::Train {
            instances,
            rho,
            b,
            setting,
            expert,
            epochs,
            batch,
            lr,
            t0,
            t_decay,
            t_floor,
            seed,
            hidden,
            baseline,
            out,
        } => {
            let instances = load_instances(&instances)
                .with_context(|| format!("reading {}", instances.display()))?;
            let mut dims = vec![FEATURE_DIM];
            dims.extend(hidden);
            dims.push(1);
            let cfg = TrainConfig {
                epochs,
                batch_size: batch,
                learning_rate: lr,
                rho,
                budget_b: b,
                setting: setting.into(),
                expert: expert.into(),
                t0,
                t_decay,
                t_floor,
                seed,
                dims,
                baseline,
            };
            let outcome = train(&instances, &cfg)?;
            outcome.params.save(&out)?;
            Ok(())
        }
        Command::Run {
            instances,
            algo,
            policy,
            rho,
            b,
            setting,
            expert,
            seed,
            cr_vs,
            format,
            out,
        } => {
            let algos = algo.iter().map(|a| a.parse()).collect::<matchlab::Result<Vec<Algo>>>()?;
            let instances = load_instances(&instances)
                .with_context(|| format!("reading {}", instances.display()))?;
            let policy = policy.map(|p| PolicyParams::load(&p)).transpose()?;
            let cfg = EvalConfig {
                setting: setting.into(),
                expert: expert.into(),
                rho,
                budget_b: b,
                cr_reference: match cr_vs {
                    CrArg::Opt => CrReference::Opt,
                    CrArg::Expert => CrReference::Expert,
                },
                seed,
            };
            let report = evaluate(&instances, &algos, policy.as_ref(), &cfg)?;
            fs::write(&out, report_render(&report, format.into())?)?;
            Ok(())
        }
        Command::Report { input, format, out } => {
            let report = parse_report(&fs::read_to_string(&input)?)?;
            fs::write(&out, report_render(&report, format.into())?)?;
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Usage(_) | Error::Config { .. } | Error::Size { .. }) => 1,
        Some(Error::Invariant(_) | Error::Capacity { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("matchlab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
