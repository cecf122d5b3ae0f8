use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use easybo::benchmarks::builtin_problems;
use easybo::harness::{compare_report, load_experiment, run_experiment, ExperimentConfig, Variant};
use easybo::scheduler::Regime;

#[derive(Parser)]
#[command(
    name = "easybo",
    version,
    about = "Asynchronous batch Bayesian optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and print its summary.
    Run(RunArgs),
    /// Compare experiment directories written by `run`.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// List the built-in problems.
    Problems,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long, value_parser = parse_regime)]
    regime: Option<Regime>,
    /// Batch size (number of workers).
    #[arg(short = 'B')]
    batch_size: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Base seed; repeat `i` derives its own seed from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: easybo::Error| e.to_string())
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    match s.to_ascii_lowercase().as_str() {
        "sequential" => Ok(Regime::Sequential),
        "sync" => Ok(Regime::Sync),
        "async" => Ok(Regime::Async),
        _ => Err(format!(
            "unknown regime '{s}', expected sequential, sync or async"
        )),
    }
}

impl RunArgs {
    fn into_config(self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.problem {
            cfg.problem = v;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(v) = self.regime {
            cfg.regime = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.budget {
            cfg.budget = v;
        }
        if let Some(v) = self.n_init {
            cfg.n_init = v;
        }
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = self.seed {
            cfg.base_seed = v;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if cfg.regime == Regime::Sequential && self.batch_size.is_none() {
            cfg.batch_size = 1;
        }
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.into_config()?;
    let exp = run_experiment(&cfg)?;
    let s = &exp.summary;
    println!("{}", s.label);
    match &s.stats {
        Some(st) => println!(
            "runs {}  best {:.6}  worst {:.6}  mean {:.6}  std {:.6}  mean time {:.2}",
            st.runs, st.best, st.worst, st.mean, st.std, st.mean_time
        ),
        None => println!("no successful runs"),
    }
    for r in s.runs.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "run {} (seed {}) failed: {}",
            r.index,
            r.seed,
            r.error.as_deref().unwrap_or("")
        );
    }
    if let Some(dir) = &cfg.out {
        println!("wrote {}", dir.display());
    }
    Ok(if s.failures() == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare { dirs } => dirs
            .iter()
            .map(|d| load_experiment(d).with_context(|| format!("loading {}", d.display())))
            .collect::<anyhow::Result<Vec<_>>>()
            .and_then(|exps| Ok(compare_report(&exps)?))
            .map(|report| {
                print!("{report}");
                ExitCode::SUCCESS
            }),
        Command::Problems => {
            for p in builtin_problems() {
                let opt = p.known_optimum.map_or("-".to_string(), |v| v.to_string());
                println!("{:<12} dim {:<3} known optimum {opt}", p.name, p.dim());
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
