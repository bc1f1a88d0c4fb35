use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod run;

use config::{Overrides, Plan};

#[derive(Parser)]
#[command(name = "bogolab", version, about = "Divergence right-inverse and constants laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<out>/<experiment>-<hash>.csv` and `.json`.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// solve, ba-scan, counterexample, relations, nl-symmetric, fourier, identities, infsup or poincare
    experiment: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature points per axis; cells per unit length for infsup and poincare.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Print the resolved plan and exit.
    #[arg(long)]
    dry_run: bool,
    /// Worker threads; overrides BOGOLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_VIOLATION: u8 = 2;
const EXIT_ERROR: u8 = 1;

fn threads(plan: &Plan) -> Result<Option<usize>, String> {
    if let Some(t) = plan.threads {
        return Ok(Some(t));
    }
    match std::env::var("BOGOLAB_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("BOGOLAB_THREADS must be a positive integer, got '{v}'")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    let flags = Overrides {
        experiment: args.experiment,
        seed: args.seed,
        out: args.out,
        resolution: args.resolution,
        a: args.a,
        eps: args.eps,
        threads: args.threads,
    };
    let plan = match config::resolve(args.config.as_deref(), &flags) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let workers = match threads(&plan) {
        Ok(Some(0)) => {
            eprintln!("error: thread count must be positive");
            return ExitCode::from(EXIT_ERROR);
        }
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    if args.dry_run {
        let (csv, json) = run::output_paths(&plan);
        print!("{}", plan.config.to_toml());
        println!("# threads = {}", workers.map_or("default".to_string(), |w| w.to_string()));
        println!("# csv = {}", csv.display());
        println!("# json = {}", json.display());
        return ExitCode::SUCCESS;
    }
    if let Some(w) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match run::execute(&plan) {
        Ok(out) => {
            println!("{}", out.csv.display());
            println!("{}", out.json.display());
            if let Some(f) = &out.field {
                println!("{}", f.display());
            }
            for w in &out.report.warnings {
                eprintln!("warning: {w}");
            }
            let failed = out.report.failed_checks();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                for c in failed {
                    eprintln!("violated: {} = {:e} (lower {:?}, upper {:?})", c.name, c.value, c.lower, c.upper);
                }
                ExitCode::from(EXIT_VIOLATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
