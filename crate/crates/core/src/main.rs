use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tmc::cli::{self, EXIT_OK, EXIT_PROPERTY, EXIT_VALIDATION};
use tmc::config::{read_config, RunConfig};
use tmc::mesh::Preset;
use tmc::verify::run_checks;

#[derive(Parser)]
#[command(name = "tmc", version, about = "Thermo-mechanical third-medium contact solver")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a load program from a config file or a bundled preset
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// override a config entry, e.g. `--set problem.params.nx=16`
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// output directory, replacing `output.directory`
        #[arg(long)]
        out: Option<PathBuf>,
        /// element-evaluation threads, replacing `solver.threads`
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the built-in property checks
    Verify {
        /// restrict to these groups
        #[arg(long)]
        only: Vec<String>,
    },
    /// Write a saved state as a VTK file
    Export {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        vtk: PathBuf,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn run(
    config: Option<PathBuf>,
    preset: Option<String>,
    mut overrides: Vec<String>,
    out: Option<PathBuf>,
    threads: Option<usize>,
) -> ExitCode {
    if let Some(t) = threads {
        overrides.push(format!("solver.threads={t}"));
    }
    let cfg = match (config, preset) {
        (Some(path), _) => read_config(&path, &overrides).map_err(|e| format!("{}: {e}", path.display())),
        (None, Some(name)) => name
            .parse::<Preset>()
            .map_err(|e| e.to_string())
            .and_then(|p| RunConfig::preset(p, &overrides).map_err(|e| format!("preset {name}: {e}"))),
        (None, None) => Err("one of --config or --preset is required".to_string()),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("validation error: {e}");
            return code(EXIT_VALIDATION);
        }
    };
    match cli::run(&cfg, out.as_deref()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if let Some(e) = &outcome.error {
                eprintln!("solver aborted: {e}");
            }
            code(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("{e}");
            code(e.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match Args::parse().command {
        Command::Run {
            config,
            preset,
            overrides,
            out,
            threads,
        } => run(config, preset, overrides, out, threads),
        Command::Verify { only } => match run_checks(&only) {
            Ok(checks) => {
                for c in &checks {
                    println!("{}", c.line());
                }
                let failed = checks.iter().filter(|c| !c.passed).count();
                println!("{} checks, {failed} failed", checks.len());
                code(if failed == 0 { EXIT_OK } else { EXIT_PROPERTY })
            }
            Err(e) => {
                eprintln!("validation error: {e}");
                code(EXIT_VALIDATION)
            }
        },
        Command::Export { state, vtk } => match cli::export(&state, &vtk) {
            Ok(()) => code(EXIT_OK),
            Err(e) => {
                eprintln!("{e}");
                code(e.exit_code())
            }
        },
    }
}
