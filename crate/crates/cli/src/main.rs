use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use rested_core::harness::{self, EnvSpec, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "rested", version, about = "Rested bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy and write regret curves, detections and a manifest.
    Run(Overrides),
    /// Sweep the TI-UCB window size.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated window sizes; defaults to `sweep.omegas` in the config.
        #[arg(long, value_delimiter = ',')]
        omegas: Vec<usize>,
    },
    /// Print the greedy allocation as JSON.
    Oracle(Overrides),
    /// Check the config and exit.
    Validate(Overrides),
}

#[derive(Args)]
struct Overrides {
    config: PathBuf,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Overrides {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(r) = self.replications {
            cfg.replications = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        let base = self.config.parent().unwrap_or(Path::new("."));
        rebase_traces(&mut cfg.environment, base);
        cfg.validate()?;
        Ok(cfg)
    }
}

// trace paths in a config file are relative to the file
fn rebase_traces(env: &mut EnvSpec, base: &Path) {
    match env {
        EnvSpec::Trace { path, estimates } => {
            for p in std::iter::once(path).chain(estimates.as_mut()) {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        EnvSpec::CostWrapped { inner, .. } => rebase_traces(inner, base),
        _ => {}
    }
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Validate(o) => {
            o.load()?;
            println!("ok");
        }
        Command::Run(o) => {
            let cfg = o.load()?;
            let result = harness::run(&cfg)?;
            for p in &result.policies {
                println!("{}\t{:.4}\t{:.4}", p.name, p.final_mean, p.final_stderr);
            }
            info!("wrote {} in {:.1?}", cfg.output_dir.display(), result.wall_clock);
        }
        Command::Sweep { overrides, omegas } => {
            let cfg = overrides.load()?;
            let omegas = if omegas.is_empty() {
                cfg.sweep.as_ref().map(|s| s.omegas.clone()).unwrap_or_default()
            } else {
                omegas
            };
            if omegas.is_empty() || omegas.contains(&0) {
                return Err(HarnessError::Invalid(vec![
                    "omegas: pass --omegas or set sweep.omegas, each at least 1".into(),
                ]));
            }
            for row in harness::sweep_window(&cfg, &omegas)? {
                println!("{}\t{:.4}\t{:.4}", row.omega, row.mean_final_regret, row.stderr);
            }
        }
        Command::Oracle(o) => {
            let report = harness::oracle(&o.load()?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is_validation() { 2 } else { 1 };
            let e = anyhow::Error::new(e).context("rested failed");
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
