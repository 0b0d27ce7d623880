use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nfl_lab::canned::{canned, SuiteSize};
use nfl_lab::{run_experiment, Arithmetic, ExperimentConfig, ExperimentKind, LabError};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "nfl-lab", version, about = "Exhaustive no-free-lunch checks and MCO benchmarks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "NFL_LAB_THREADS")]
    threads: Option<usize>,
    /// Override the config's arithmetic for prior masses.
    #[arg(long, global = true, value_enum)]
    arithmetic: Option<Arithmetic>,
    /// Directory for reports; overrides `[output] dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct KindArgs {
    /// Config file; the built-in config for this kind when omitted.
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "small")]
    size: SuiteSize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Run every built-in check.
    VerifyAll {
        #[arg(long, value_enum, default_value = "small")]
        size: SuiteSize,
    },
    /// List experiment kinds.
    ListExperiments,
    NflSumSweep(KindArgs),
    InnerProduct(KindArgs),
    PriorMc(KindArgs),
    SupervisedNfl(KindArgs),
    CvVsAnticv(KindArgs),
    ConditioningContrast(KindArgs),
    MetaInduction(KindArgs),
    McoBenchmark(KindArgs),
}

struct Runner {
    arithmetic: Option<Arithmetic>,
    out_dir: Option<PathBuf>,
}

impl Runner {
    /// Runs one config, writes its outputs and prints a summary line.
    fn run(&self, mut cfg: ExperimentConfig) -> Result<bool, LabError> {
        if let Some(a) = self.arithmetic {
            cfg.arithmetic = a;
        }
        let dir = self
            .out_dir
            .clone()
            .or_else(|| cfg.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("results"));
        let start = Instant::now();
        let report = run_experiment(&cfg)?;
        let elapsed = start.elapsed();
        let paths = report.write(&dir, &cfg.stem())?;
        let tag = if report.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {} ({} checks, {:.2?}) -> {}",
            cfg.kind,
            report.checks.len(),
            elapsed,
            paths[0].display()
        );
        for c in report.failed_checks() {
            println!("       failed {}: {}", c.name, c.detail);
        }
        Ok(report.pass)
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, LabError> {
    ExperimentConfig::from_path(path)
}

fn for_kind(kind: ExperimentKind, args: &KindArgs) -> Result<ExperimentConfig, LabError> {
    let cfg = match &args.config {
        Some(path) => load(path)?,
        None => canned(args.size, kind)?,
    };
    if cfg.kind != kind {
        return Err(LabError::Schema {
            field: "kind".into(),
            reason: format!("config is `{}`, subcommand expects `{kind}`", cfg.kind),
        });
    }
    Ok(cfg)
}

fn exit_for(err: &LabError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let runner = Runner { arithmetic: cli.arithmetic, out_dir: cli.out_dir };

    let outcome = match &cli.command {
        Command::ListExperiments => {
            for kind in ExperimentKind::ALL {
                println!("{:<24}{}", kind.name(), kind.summary());
            }
            return ExitCode::SUCCESS;
        }
        Command::Run { config } => load(config).and_then(|cfg| runner.run(cfg)),
        Command::VerifyAll { size } => {
            // Parse everything first so a broken config aborts before output.
            let configs: Result<Vec<_>, _> = ExperimentKind::ALL.iter().map(|k| canned(*size, *k)).collect();
            configs.and_then(|configs| {
                let mut all = true;
                for cfg in configs {
                    all &= runner.run(cfg)?;
                }
                println!("{}", if all { "all checks passed" } else { "some checks failed" });
                Ok(all)
            })
        }
        Command::NflSumSweep(a) => for_kind(ExperimentKind::NflSumSweep, a).and_then(|c| runner.run(c)),
        Command::InnerProduct(a) => for_kind(ExperimentKind::InnerProduct, a).and_then(|c| runner.run(c)),
        Command::PriorMc(a) => for_kind(ExperimentKind::PriorMc, a).and_then(|c| runner.run(c)),
        Command::SupervisedNfl(a) => for_kind(ExperimentKind::SupervisedNfl, a).and_then(|c| runner.run(c)),
        Command::CvVsAnticv(a) => for_kind(ExperimentKind::CvVsAnticv, a).and_then(|c| runner.run(c)),
        Command::ConditioningContrast(a) => {
            for_kind(ExperimentKind::ConditioningContrast, a).and_then(|c| runner.run(c))
        }
        Command::MetaInduction(a) => for_kind(ExperimentKind::MetaInduction, a).and_then(|c| runner.run(c)),
        Command::McoBenchmark(a) => for_kind(ExperimentKind::McoBenchmark, a).and_then(|c| runner.run(c)),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => exit_for(&e),
    }
}
