//! Thin command-line front end: `needle <experiment> [--config ...]`.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 i/o error.

use clap::Parser;
use spinneedle::cli::{parse_config, run_with_options, Experiment};

#[derive(Parser, Debug)]
#[command(
    name = "needle",
    about = "Spin-lattice needle dynamics experiments",
    version
)]
struct Args {
    /// Experiment to run: precess | regimes | noise | berry | nutate | sweep
    experiment: String,
    /// TOML config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

fn experiment_from_name(name: &str) -> Option<Experiment> {
    Some(match name {
        "precess" => Experiment::Precess,
        "regimes" => Experiment::Regimes,
        "noise" => Experiment::Noise,
        "berry" => Experiment::Berry,
        "nutate" => Experiment::Nutate,
        "sweep" => Experiment::Sweep,
        _ => return None,
    })
}

fn main() {
    let args = Args::parse();
    std::process::exit(run_main(&args));
}

fn run_main(args: &Args) -> i32 {
    let Some(experiment) = experiment_from_name(&args.experiment) else {
        eprintln!(
            "error: unknown experiment `{}` (expected precess, regimes, noise, berry, nutate, or sweep)",
            args.experiment
        );
        return 2;
    };

    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return 4;
            }
        },
        None => format!("experiment = \"{}\"\n", experiment.name()),
    };

    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if config.experiment != experiment {
        eprintln!(
            "error: config declares experiment `{}` but the command line says `{}`",
            config.experiment.name(),
            experiment.name()
        );
        return 2;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.display().to_string();
    }

    match run_with_options(&config, args.quiet) {
        Ok(manifest) => {
            if !args.quiet {
                println!(
                    "wrote {} file(s) to {}",
                    manifest.files.len(),
                    config.output_dir
                );
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
