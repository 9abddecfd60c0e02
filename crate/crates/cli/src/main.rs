//! `fedgraph`: split graphs across simulated clients, train FedGCN or
//! AdaFGL, and report graph statistics.
//!
//! Exit codes: 0 success, 1 validation error, 2 runtime error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use fedgraph_cli::run::{cmd_split, cmd_train, load_source, resolve_out, split_table};
use fedgraph_cli::{exit_code, metrics, ExperimentConfig, Method, ValidationError};

#[derive(Parser)]
#[command(name = "fedgraph", version, about = "Federated graph learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a dataset into a federated task directory.
    Split(Common),
    /// Train on every configured seed and write results.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Per-client statistics of a graph or task directory as CSV.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Graph or task directory; defaults to the config's dataset.
        path: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single seed: the split seed for `split`, the only training seed for `train`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    participation: Option<f64>,
    #[arg(long)]
    feature_missing: Option<f64>,
    #[arg(long)]
    edge_drop: Option<f64>,
    #[arg(long)]
    label_rate: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.dataset {
            cfg.dataset = d.clone();
        }
        if let Some(p) = self.participation {
            cfg.federation.participation = p;
        }
        if let Some(f) = self.feature_missing {
            cfg.sparsity.feature_missing = f;
        }
        if let Some(e) = self.edge_drop {
            cfg.sparsity.edge_drop = e;
        }
        if self.label_rate.is_some() {
            cfg.sparsity.label_rate = self.label_rate;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Split(common) => {
            let mut cfg = common.config()?;
            if let Some(s) = common.seed {
                cfg.split.seed = s;
            }
            let out = resolve_out(None, &cfg)?;
            let task = cmd_split(&cfg, &out)?;
            emit(&split_table(&task));
        }
        Command::Train { common, method } => {
            let mut cfg = common.config()?;
            if let Some(s) = common.seed {
                cfg.seeds = vec![s];
            }
            if let Some(m) = method {
                cfg.method = m;
            }
            let out = resolve_out(None, &cfg)?;
            let output = cmd_train(&cfg, &out)?;
            let r = &output.results;
            for (name, s) in [("fedgcn", &r.fedgcn), ("adafgl", &r.adafgl)] {
                if let Some(s) = s {
                    emit(&format!(
                        "{name}\t{:.4} ± {:.4}\t({} seeds)\n",
                        s.mean,
                        s.std,
                        s.per_seed.len()
                    ));
                }
            }
            emit(&format!("wrote {}\n", out.display()));
        }
        Command::Metrics { common, path } => {
            let mut cfg = common.config()?;
            if let Some(p) = path {
                cfg.dataset = p;
            }
            cfg.validate()?;
            let csv = metrics::metrics_csv(&load_source(&cfg)?);
            if let Some(out) = &cfg.out {
                std::fs::create_dir_all(out)?;
                std::fs::write(out.join("metrics.csv"), &csv)?;
                std::fs::write(out.join("config.json"), cfg.to_json())?;
            }
            emit(&csv);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let kind = if e.downcast_ref::<ValidationError>().is_some() {
                "invalid configuration"
            } else {
                "error"
            };
            eprintln!("{kind}: {e:#}");
            ExitCode::from(code as u8)
        }
    }
}
