use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hcl::commands::{cmd_bound_check, cmd_eval, cmd_noise_sweep, cmd_perf_sweep, cmd_train};
use hcl::config::RunConfig;
use hcl::error::{AppError, AppResult};
use hcl::io::write_atomic;
use hcl::record::ReportRow;

#[derive(Parser)]
#[command(name = "hcl", version, about = "Hybrid contrastive multi-label training and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train each method for each seed and write records and summaries.
    Train(Common),
    /// Score a checkpoint on the unlabeled rows of the configured dataset.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Compare trained losses with mutual-information references.
    BoundCheck(Common),
    /// Train across feature-noise levels and view modes.
    NoiseSweep(Common),
    /// Time training against train size and negative-set size.
    PerfSweep(Common),
}

/// Flags override the matching config keys.
#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated methods.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    neg_size: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epochs: Option<String>,
}

impl Common {
    fn config(&self) -> AppResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for (key, value) in [
            ("seeds", &self.seed),
            ("out", &self.out),
            ("method", &self.method),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("neg_size", &self.neg_size),
            ("epochs", &self.epochs),
        ] {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.config()?;
            for r in cmd_train(&cfg)? {
                println!("{} seed {}: f1 {:.4} auc {:.4}", r.method, r.seed, r.report.f1, r.report.auc);
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Eval { common, checkpoint } => {
            let cfg = common.config()?;
            let report = cmd_eval(&cfg, &checkpoint)?;
            let json = serde_json::to_string_pretty(&ReportRow::from(&report)).expect("report serializes");
            let path = cfg.out.join("eval.json");
            write_atomic(&path, json.as_bytes())?;
            println!("{json}");
        }
        Command::BoundCheck(c) => {
            let cfg = c.config()?;
            let reports = cmd_bound_check(&cfg)?;
            let failed = reports.iter().filter(|r| !r.satisfied).count();
            println!("{} checks, {failed} unsatisfied; wrote {}", reports.len(), cfg.out.join("bounds.csv").display());
        }
        Command::NoiseSweep(c) => {
            let cfg = c.config()?;
            let rows = cmd_noise_sweep(&cfg)?;
            println!("{} runs; wrote {}", rows.len(), cfg.out.join("noise_summary.csv").display());
        }
        Command::PerfSweep(c) => {
            let cfg = c.config()?;
            let p = cmd_perf_sweep(&cfg)?;
            println!(
                "train-size linear R² {:.4}, negative-size quadratic R² {:.4}",
                p.linear.r_squared, p.quadratic.r_squared
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                AppError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
