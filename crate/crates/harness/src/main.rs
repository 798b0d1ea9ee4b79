use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feddw_core::fl::RunConfig;
use feddw_harness::experiment::run_dir_name;
use feddw_harness::{
    heatmap_export, norm_study, parse_config, run_experiment, sweep, HarnessError, Overrides, Preset, Result,
    SWEEP_MUS,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "feddw", version, about = "Federated learning experiments with SL/CR consistency regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one federated experiment.
    Run(RunArgs),
    /// Run one FedDW experiment per μ value.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated μ values.
        #[arg(long, value_delimiter = ',')]
        mus: Option<Vec<f64>>,
    },
    /// Train centrally on resampled class proportions and report classifier row norms.
    NormStudy {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated class proportions summing to 1 (default uniform).
        #[arg(long, value_delimiter = ',')]
        proportions: Option<Vec<f64>>,
    },
    /// Export the SL and softmax(CR) matrices of a finished run.
    Heatmap {
        run_dir: PathBuf,
        /// Destination directory (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    /// Root directory for run outputs.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Replace an existing non-empty output directory.
    #[arg(long)]
    force: bool,
    /// fedavg, fedprox, feddw or local.
    #[arg(long)]
    strategy: Option<String>,
    /// Regularizer weight (feddw) or proximal weight (fedprox).
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long)]
    clients: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(path) => Some(fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?),
            None => None,
        };
        let flags = Overrides {
            strategy: self.strategy.clone(),
            mu: self.mu,
            beta: self.beta,
            clients: self.clients,
            rounds: self.rounds,
            seed: self.seed,
        };
        parse_config(self.preset, text.as_deref(), &flags)
    }
}

fn write_report(path: &Path, value: &serde_json::Value, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(HarnessError::OutputExists(path.to_path_buf()));
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn execute(command: Command) -> Result<serde_json::Value> {
    match command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let run = run_experiment(&config, &args.out, args.force)?;
            Ok(json!({
                "dir": run.dir,
                "rounds": run.summary.rounds_completed,
                "final": run.summary.final_metrics,
            }))
        }
        Command::Sweep { run, mus } => {
            let config = run.resolve()?;
            let mus = mus.unwrap_or_else(|| SWEEP_MUS.to_vec());
            let points = sweep(&config, &mus, &run.out, run.force)?;
            Ok(serde_json::to_value(points)?)
        }
        Command::NormStudy { run, proportions } => {
            let config = run.resolve()?;
            let classes = config.dataset.class_count();
            let proportions = proportions.unwrap_or_else(|| vec![1.0 / classes as f64; classes]);
            let report = serde_json::to_value(norm_study(&proportions, &config)?)?;
            let path = run.out.join(format!("norm-study-{}.json", run_dir_name(&config)?));
            write_report(&path, &report, run.force)?;
            Ok(json!({ "report": path, "result": report }))
        }
        Command::Heatmap { run_dir, out } => {
            let out = out.unwrap_or_else(|| run_dir.clone());
            let export = heatmap_export(&run_dir, &out)?;
            Ok(json!({ "dir": out, "classes": export.classes, "distance": export.distance }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(value) => {
            println!("{value}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::to_string(&e.report()).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", e.kind()));
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
