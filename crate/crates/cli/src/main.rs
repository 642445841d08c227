use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use srcirc::runner::{resolve_output_dir, run_config, run_recipe, Artifacts, RecipeSettings, RunConfig, OUT_DIR_ENV, RECIPES};
use srcirc::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "srcirc", version, about = "Simulate and analyse strontium circular Rydberg spectroscopy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a TOML run configuration.
    Run { config: PathBuf },
    /// Check a TOML run configuration without running it.
    Validate { config: PathBuf },
    /// Run a shipped recipe and write its artifacts to <out>/<recipe>.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(RECIPES))]
        recipe: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output root; falls back to the config default when unset.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Expectation values instead of sampled shots.
        #[arg(long)]
        noiseless: bool,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain(_) | Error::Unsupported(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::load(path).map_err(|e| match e {
        Error::Io(m) => Failure::Validation(format!("cannot read config: {m}")),
        other => Failure::Validation(other.to_string()),
    })
}

fn check(cfg: &RunConfig) -> Result<(), Failure> {
    let d = cfg.diagnostics();
    if d.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(d.join("\n")))
    }
}

/// Nine significant digits, switching to exponent form for small magnitudes.
fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if mag < -3 {
        format!("{v:.8e}")
    } else {
        format!("{v:.*}", (8 - mag).clamp(0, 12) as usize)
    }
}

fn print_summary(a: &Artifacts) {
    let width = a.summary.iter().map(|r| r.quantity.len()).max().unwrap_or(0);
    for r in &a.summary {
        let sigma = r.sigma.map(|s| format!(" ± {}", num(s))).unwrap_or_default();
        println!("{:width$}  {}{sigma} {}", r.quantity, num(r.value), r.unit);
    }
}

fn emit(a: &Artifacts, dir: &Path) -> Result<(), Failure> {
    let paths = a.write(dir).map_err(|e| Failure::Runtime(format!("writing artifacts: {e}")))?;
    print_summary(a);
    println!("wrote {} files to {}", paths.len(), dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config } => {
            check(&load(&config)?)?;
            println!("{}: no diagnostics", config.display());
            Ok(())
        }
        Command::Run { config } => {
            let cfg = load(&config)?;
            check(&cfg)?;
            let a = run_config(&cfg)?;
            emit(&a, &cfg.resolved_output_dir())
        }
        Command::Reproduce { recipe, seed, out, noiseless } => {
            let a = run_recipe(&recipe, &RecipeSettings::reproduction(seed, noiseless))?;
            emit(&a, &resolve_output_dir(out).join(&recipe))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("validation failed:\n{m}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("run failed: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
