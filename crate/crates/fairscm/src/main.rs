//! Thin CLI over the library pipeline: generate datasets, evaluate
//! estimators, emit rank-stability tables, and run the counterexample demo.
//!
//! Exit codes: 0 success, 1 config/validation error, 2 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairscm::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "fairscm", version, about = "Fairness estimation over structural causal models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset from a model JSON and write it as CSV.
    Generate {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Number of rows to sample.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit estimators and write the fairness/accuracy report.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Report JSON output path.
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Markdown tables output path.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Rank a sampled subset of one group under each estimator.
    Rankdiff {
        #[command(flatten)]
        config: ConfigArgs,
        /// Group label to sample from.
        #[arg(long)]
        group: String,
        /// Individuals to sample (without replacement).
        #[arg(long, default_value_t = 40)]
        sample_size: usize,
        /// Seed for the sampling (independent of the dataset seed).
        #[arg(long, default_value_t = 0)]
        rank_seed: u64,
        /// Output CSV path.
        #[arg(long, default_value = "rankdiff.csv")]
        out: PathBuf,
    },
    /// Print the order-inversion counterexample table and verdicts.
    DemoCounterexample,
}

#[derive(Args)]
struct ConfigArgs {
    /// Model JSON to sample from (exclusive with --data).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Dataset CSV to load (exclusive with --model).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Rows to sample when --model is given.
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Comma-separated estimators (level1,level2,level3,listing1,listing2,
    /// full, or dp_wrapped:<base>).
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    #[arg(long, default_value_t = harness::DEFAULT_TRAIN_FRAC)]
    train_frac: f64,
    /// ACF threshold; repeatable.
    #[arg(long = "epsilon")]
    epsilons: Vec<f64>,
    #[arg(long)]
    group_col: Option<String>,
    #[arg(long)]
    outcome_col: Option<String>,
}

impl From<ConfigArgs> for ExperimentConfig {
    fn from(args: ConfigArgs) -> ExperimentConfig {
        ExperimentConfig {
            model: args.model,
            data: args.data,
            n: args.n,
            seed: args.seed,
            estimators: args.estimators.unwrap_or_else(harness::default_estimators),
            train_frac: args.train_frac,
            epsilons: if args.epsilons.is_empty() {
                harness::DEFAULT_EPSILONS.to_vec()
            } else {
                args.epsilons
            },
            group_col: args.group_col,
            outcome_col: args.outcome_col,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> fairscm::Result<ExitCode> {
    match cli.command {
        Command::Generate { model, n, seed, out } => {
            harness::cmd_generate(&model, n, seed, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { config, out, tables } => {
            let config: ExperimentConfig = config.into();
            let report = harness::cmd_evaluate(&config, &out, tables.as_deref())?;
            println!("wrote {}", out.display());
            if let Some(t) = tables {
                println!("wrote {}", t.display());
            }
            for est in &report.estimators {
                match (&est.prediction_kw, &est.error) {
                    (Some(kw), _) => println!(
                        "{}: H = {}, p = {}, rMSE = {}",
                        est.name,
                        harness::format_sig(kw.h, 3),
                        harness::format_sig(kw.p, 3),
                        harness::format_sig(est.rmse.unwrap_or(f64::NAN), 3)
                    ),
                    (None, Some(err)) => println!("{}: error: {err}", est.name),
                    _ => {}
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rankdiff {
            config,
            group,
            sample_size,
            rank_seed,
            out,
        } => {
            let config: ExperimentConfig = config.into();
            harness::cmd_rankdiff(&config, &group, sample_size, rank_seed, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::DemoCounterexample => {
            let (report, text) = harness::cmd_demo_counterexample();
            println!("{text}");
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            if report.verdicts() == (true, true, false) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
