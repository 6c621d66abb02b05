use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tabstack_cli::commands;
use tabstack_cli::config::{ExperimentConfig, Overrides};
use tabstack_cli::error::CliResult;
use tabstack_cli::results::ReportFormat;

/// Stacked-ensemble binary classification for tabular data.
#[derive(Parser)]
#[command(name = "tabstack", version, about)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Filter outliers on the full dataset before splitting instead of the
    /// leakage-safe default (training rows only).
    #[arg(long, global = true)]
    paper_order: bool,

    /// Compute the ROC and log-loss report columns from hard 0/1 predictions
    /// instead of probabilities.
    #[arg(long, global = true)]
    paper_metrics: bool,

    /// Worker threads (default: one per core). Results are identical at any
    /// thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a CSV: drop rows with missing cells, remove z-score outliers,
    /// write the cleaned file and a JSON summary sidecar.
    Prep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Summary path (default: <output>.summary.json).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Override the configured |z| threshold.
        #[arg(long)]
        z_threshold: Option<f64>,
    },
    /// Train the stacked ensemble on the configured dataset and save it.
    Train {
        /// Dataset CSV (overrides dataset.path from the config).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model_out: PathBuf,
        /// Write the held-out test rows (raw values) to this CSV.
        #[arg(long)]
        test_out: Option<PathBuf>,
        /// Write the final training rows (raw values) to this CSV.
        #[arg(long)]
        train_out: Option<PathBuf>,
    },
    /// Evaluate a saved model on a test CSV: prints the metric table and
    /// writes a results directory.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate the stack and every roster member on the configured
    /// dataset.
    Cv {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render report files from a results directory.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Output directory (default: the results directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score new rows with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
}

fn run(cli: Cli) -> CliResult<()> {
    let overrides = Overrides {
        seed: cli.seed,
        paper_order: cli.paper_order,
        paper_metrics: cli.paper_metrics,
        data: match &cli.command {
            Command::Train { data, .. } | Command::Cv { data, .. } => data.clone(),
            _ => None,
        },
    };
    let config = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;

    match cli.command {
        Command::Prep { input, output, summary, z_threshold } => {
            commands::cmd_prep(&config, &input, &output, summary.as_deref(), z_threshold)
        }
        Command::Train { model_out, test_out, train_out, .. } => {
            commands::cmd_train(&config, &model_out, test_out.as_deref(), train_out.as_deref())
        }
        Command::Evaluate { model, test, out } => {
            commands::cmd_evaluate(&config, &model, &test, &out)
        }
        Command::Cv { out, .. } => commands::cmd_cv(&config, &out),
        Command::Report { results, format, out } => {
            let format = match format {
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Md => ReportFormat::Md,
            };
            commands::cmd_report(&results, format, out.as_deref())
        }
        Command::Predict { model, input, output } => {
            commands::cmd_predict(&config, &model, &input, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let body = move || match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    };
    match threads {
        Some(n) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool,
                Err(e) => {
                    eprintln!("error: cannot build a {n}-thread pool: {e}");
                    return ExitCode::from(2);
                }
            };
            pool.install(body)
        }
        None => body(),
    }
}
