use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tokenlab::config::{resolve, ExperimentConfig, CONFIG_ENV};
use tokenlab::dataset::{export_dataset, import_dataset};
use tokenlab::experiment::{
    classify_records, generate_records, generate_with_trade_logs, prepare_tokens, run_experiment, DATASET_FILE,
    TRADES_DIR,
};
use tokenlab::report::{
    render_cohort_stats, render_crosstable_text, render_distinctness, render_predictions, render_summary,
};
use tokenlab::server::{serve, ServerState};
use tokenlab_core::analytics::cohort_stats;
use tokenlab_core::tokens::{build_token_set, check_distinctness};

#[derive(Parser)]
#[command(name = "tokenlab", version, about = "Information-token trading experiments")]
struct Cli {
    /// Experiment config (JSON). Defaults to the built-in configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cohort and write the dataset CSV.
    Generate {
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Also write one trade-log CSV per session under <out>/trades.
        #[arg(long)]
        trade_logs: bool,
        /// Continue even if token encodings are not distinct.
        #[arg(long)]
        force: bool,
    },
    /// Split and classify a dataset; prints both success summaries.
    Classify {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Classify a dataset and write the cross-table and summary reports.
    Report {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Print the pairwise token distinctness report.
    VerifyTokens,
    /// Print the effective configuration as JSON.
    Config,
    /// Generate, classify and report in one run, with a manifest.
    Run {
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        force: bool,
    },
    /// Start the live session server.
    Serve {
        /// Address to bind, e.g. 127.0.0.1:8080.
        #[arg(long)]
        bind: Option<String>,
        /// Milliseconds per step in real-time mode.
        #[arg(long)]
        tick_ms: Option<u64>,
    },
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn out_dir(config: &ExperimentConfig) -> anyhow::Result<PathBuf> {
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut config = resolve(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    let dataset_arg = |d: Option<PathBuf>, c: &ExperimentConfig| d.unwrap_or_else(|| c.output_dir.join(DATASET_FILE));

    match cli.command {
        Command::Generate { workers, trade_logs, force } => {
            if let Some(w) = workers {
                config.workers = w;
            }
            let (tokens, _) = prepare_tokens(&config, force)?;
            let dir = out_dir(&config)?;
            let records = if trade_logs {
                let logs = dir.join(TRADES_DIR);
                let records = generate_with_trade_logs(&config, &tokens, &logs)?;
                println!("wrote {} trade logs to {}", records.len(), logs.display());
                records
            } else {
                generate_records(&config, &tokens)?
            };
            let path = dir.join(DATASET_FILE);
            export_dataset(&records, &path)?;
            println!("wrote {} records to {}", records.len(), path.display());
        }
        Command::Classify { dataset } => {
            let path = dataset_arg(dataset, &config);
            let records = import_dataset(&path)?;
            let ev = classify_records(&config, &records)?;
            print!("{}", render_summary(&[ev.all_tokens.clone(), ev.informed_tokens.clone()]));
            let dir = out_dir(&config)?;
            write(&dir.join("predictions.csv"), &render_predictions(&records, &ev.partition.test, &ev.predicted))?;
        }
        Command::Report { dataset } => {
            let path = dataset_arg(dataset, &config);
            let records = import_dataset(&path)?;
            let ev = classify_records(&config, &records)?;
            let stats = cohort_stats(&records).context("dataset is empty")?;
            let table = render_crosstable_text(&ev.crosstable);
            let summary = render_summary(&[ev.all_tokens.clone(), ev.informed_tokens.clone()]);
            let cohorts = render_cohort_stats(&stats, &records, Some(&ev.partition));
            let dir = out_dir(&config)?;
            write(&dir.join("crosstable.txt"), &table)?;
            write(&dir.join("summary.txt"), &summary)?;
            write(&dir.join("cohort_stats.txt"), &cohorts)?;
            print!("{cohorts}{table}\n{summary}");
        }
        Command::VerifyTokens => {
            let tokens = build_token_set(&config.virtue, &config.templates)?;
            let report = check_distinctness(&tokens, &config.distinctness);
            print!("{}", render_distinctness(&report));
            if !report.sufficient {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Config => println!("{}", config.to_json()),
        Command::Run { workers, force } => {
            if let Some(w) = workers {
                config.workers = w;
            }
            let bundle = run_experiment(&config, force)?;
            let ev = &bundle.evaluation;
            print!("{}", render_summary(&[ev.all_tokens.clone(), ev.informed_tokens.clone()]));
            println!("artifacts in {}", bundle.output_dir.display());
        }
        Command::Serve { bind, tick_ms } => {
            if let Some(b) = bind {
                config.server.bind = b;
            }
            if let Some(t) = tick_ms {
                config.server.tick_ms = t;
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&config.server.bind)
                    .await
                    .with_context(|| format!("cannot bind {}", config.server.bind))?;
                let state = ServerState::new(config)?;
                println!("listening on {}", listener.local_addr()?);
                println!("finalized sessions go to {}", state.dataset_path().display());
                serve(state, listener).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
