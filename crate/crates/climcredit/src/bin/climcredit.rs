//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input or config, 3 model not well posed,
//! 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use climcredit::config::RunConfig;
use climcredit::fixture::{self, FixtureOptions};
use climcredit::pipeline::{run_pipeline, write_outputs, FailureKind, PipelineError, Stage};

#[derive(Parser)]
#[command(name = "climcredit", version, about = "Climate transition credit risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit all parameters and write bundle.json.
    Calibrate(RunArgs),
    /// Simulate output growth under every scenario.
    Simulate(RunArgs),
    /// Estimate PD, EL, UL and ES per group and year.
    Risk(RunArgs),
    /// Risk plus climate sensitivities of EL and UL.
    Sensitivity(RunArgs),
    /// Calibrate and check well-posedness without simulating.
    Validate(RunArgs),
    /// Generate the synthetic data set and run the full pipeline on it.
    Demo(DemoArgs),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results are identical for any value.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct DemoArgs {
    /// Seed of the synthetic data.
    #[arg(long, default_value_t = FixtureOptions::default().seed)]
    data_seed: u64,
    #[command(flatten)]
    overrides: Overrides,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.risk.seed = s;
        }
        if let Some(p) = self.paths {
            cfg.risk.paths = p;
        }
        if let Some(a) = self.alpha {
            cfg.risk.alpha = a;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
    }
}

fn load(args: &RunArgs) -> Result<RunConfig, PipelineError> {
    let mut cfg = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg);
    Ok(cfg)
}

fn execute(cfg: &RunConfig, until: Stage) -> Result<(), PipelineError> {
    let out = match run_pipeline(cfg, until) {
        Ok(o) => o,
        Err(e) => return Err(e),
    };
    if let Some(wp) = &out.report.well_posedness {
        println!(
            "well-posedness: pass (gamma norm {}, spectral radius {})",
            wp.gamma_norm, wp.spectral_radius
        );
    }
    for p in write_outputs(&out, cfg)? {
        println!("wrote {}", p.display());
    }
    println!("bundle {}", out.calibrated.hash);
    Ok(())
}

fn demo(args: &DemoArgs) -> Result<(), PipelineError> {
    let out = args.overrides.out.clone().unwrap_or_else(|| PathBuf::from("demo-out"));
    let data_dir = out.join("data");
    let opts = FixtureOptions {
        seed: args.data_seed,
        ..FixtureOptions::default()
    };
    let fx = fixture::generate(&opts).map_err(|e| PipelineError::new(Stage::Ingest, FailureKind::Numeric, e.to_string()))?;
    let cfg_path = fx
        .write(&data_dir)
        .map_err(|e| PipelineError::new(Stage::Ingest, FailureKind::Validation, e.to_string()))?;
    println!("wrote synthetic data to {}", data_dir.display());
    let mut cfg = RunConfig::load(&cfg_path)?;
    args.overrides.apply(&mut cfg);
    cfg.out = out;
    execute(&cfg, Stage::Sensitivity)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Calibrate(a) => load(a).and_then(|c| execute(&c, Stage::Calibrate)),
        Command::Simulate(a) => load(a).and_then(|c| execute(&c, Stage::Simulate)),
        Command::Risk(a) => load(a).and_then(|c| execute(&c, Stage::Risk)),
        Command::Sensitivity(a) => load(a).and_then(|c| execute(&c, Stage::Sensitivity)),
        Command::Validate(a) => load(a).and_then(|c| execute(&c, Stage::WellPosedness)),
        Command::Demo(a) => demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
