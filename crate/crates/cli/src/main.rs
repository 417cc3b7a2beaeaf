use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imcgl::io::{load_config, run_experiment, Experiment, RunConfig, RunSummary, CODE_VERSION};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "imcgl",
    version,
    about = "Inertial-manifold experiments for a modified 3D complex Ginzburg-Landau system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one initial condition and record energies.
    Simulate(RunArgs),
    /// Certify the cone inequality along random pairs of trajectories.
    ConeCheck(RunArgs),
    /// Scan N for small spatial-averaging operator norms.
    NSearch(RunArgs),
    /// Evaluate graph points of the inertial manifold.
    BuildManifold(RunArgs),
    /// Fit tracking rates of trajectories towards the manifold.
    Track(RunArgs),
    /// Estimate the Hölder exponent of the graph's secant defect.
    ProbeSmoothness(RunArgs),
    /// Record sup norms along long runs and suggest cut-off radii.
    CalibrateRadii(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::Simulate(a) => (Experiment::Simulate, a),
            Command::ConeCheck(a) => (Experiment::ConeCheck, a),
            Command::NSearch(a) => (Experiment::NSearch, a),
            Command::BuildManifold(a) => (Experiment::BuildManifold, a),
            Command::Track(a) => (Experiment::Track, a),
            Command::ProbeSmoothness(a) => (Experiment::ProbeSmoothness, a),
            Command::CalibrateRadii(a) => (Experiment::CalibrateRadii, a),
        }
    }
}

fn out_dir(args: &RunArgs, cfg: Option<&RunConfig>, experiment: Experiment) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()))
}

fn resolve(args: &RunArgs, experiment: Experiment) -> imcgl::Result<RunConfig> {
    let mut cfg = load_config(&args.config)?;
    cfg.experiment = Some(experiment);
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_error(dir: &Path, record: &serde_json::Value) {
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(record).expect("plain JSON value")
    );
    let written =
        std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("error.json"), text));
    if let Err(e) = written {
        eprintln!("could not write error record to {}: {e}", dir.display());
    }
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<RunSummary, (PathBuf, imcgl::Error)> {
    let cfg = resolve(args, experiment).map_err(|e| (out_dir(args, None, experiment), e))?;
    let dir = out_dir(args, Some(&cfg), experiment);
    run_experiment(&cfg, &dir).map_err(|e| (dir, e))
}

fn main() -> ExitCode {
    let (experiment, args) = Cli::parse().command.split();
    match run(experiment, &args) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string(&summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err((dir, e)) => {
            let record = json!({
                "status": "error",
                "experiment": experiment.name(),
                "code": e.code(),
                "message": e.to_string(),
                "code_version": CODE_VERSION,
            });
            write_error(&dir, &record);
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
