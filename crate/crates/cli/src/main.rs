use clap::Parser;
use collapsar::{CliError, Experiment, ExperimentConfig, EXIT_CHECK_FAILED};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs one experiment of the semirelativistic Hartree study and writes
/// monitors.csv / sweep.csv / report.json into the output directory.
#[derive(Parser, Debug)]
#[command(name = "collapsar", version)]
struct Args {
    /// evolve, reg-sweep, blowup, critical-lambda, fock-check or inequalities
    experiment: String,
    /// Config file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 4 when an acceptance threshold fails.
    #[arg(long)]
    check: bool,
}

fn run(args: &Args) -> Result<bool, CliError> {
    let experiment: Experiment = args.experiment.parse()?;
    if args.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let mut cfg = ExperimentConfig::load(&args.config, Some(experiment))?;
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let outcome = collapsar::run(&cfg, args.jobs)?;
    for c in &outcome.checks {
        let value = c.value.map_or("-".to_string(), |v| format!("{v:.6e}"));
        let mark = if c.pass { "pass" } else { "FAIL" };
        println!("{mark}  {}: {value} ({})", c.name, c.requirement);
    }
    println!("outputs written to {}", cfg.output_dir.display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(passed) if args.check && !passed => ExitCode::from(EXIT_CHECK_FAILED as u8),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("collapsar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
