//! `cslfi`: runs the transient and steady-state experiments from a config
//! file and writes CSV.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use csl_fisher::csl::{alpha_factor, csl_diffusion_rate};
use csl_fisher::scenario::{
    self, config::parse_csl_only, ScenarioConfig, Strategy, KEYS, SWEEPABLE,
};
use csl_fisher::Error;

#[derive(Debug, Parser)]
#[command(
    name = "cslfi",
    version,
    about = "Fisher information for estimating the CSL diffusion rate"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Scenario config file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output CSV; written to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Strategies to evaluate.
    #[arg(long, default_value = "both", value_parser = ["classical", "quantum", "both"])]
    strategy: String,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Classical vs quantum strategy on the configured time grid.
    Transient(RunArgs),
    /// Local vs EPR scheme at the steady state, over the configured sweep.
    SteadySweep(RunArgs),
    /// Print the mass-scaling factor alpha and the diffusion rate Lambda.
    Alpha {
        /// File with the csl keys and system.omega_m.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Run the invariant checks on a config without writing data.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PHYSICS: u8 = 3;
const EXIT_IO: u8 = 4;

fn key_table() -> String {
    let width = KEYS.iter().map(|k| k.key.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (`section.key = value`, `#` comments):\n");
    for k in KEYS {
        let _ = writeln!(out, "  {:width$}  [{}]  {}", k.key, k.unit, k.help);
    }
    let _ = write!(out, "\nSweepable keys: {}\n", SWEEPABLE.join(", "));
    out.push_str("\nExit codes: 0 success, 2 config error, 3 physics error, 4 IO error.");
    out
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        e if e.is_physics() => EXIT_PHYSICS,
        _ => EXIT_CONFIG,
    }
}

fn read_text(path: &Path) -> csl_fisher::Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_stdout(text: &str) -> csl_fisher::Result<()> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn run_verb(args: &RunArgs, steady: bool) -> csl_fisher::Result<()> {
    let config = ScenarioConfig::from_path(&args.config)?;
    let strategy: Strategy = args.strategy.parse().map_err(|m: String| Error::Config {
        line: None,
        message: m,
    })?;
    let table = if steady {
        scenario::run_steady_sweep(&config, strategy)?
    } else {
        scenario::run_transient(&config, strategy)?
    };
    match &args.out {
        Some(path) => scenario::emit_csv(&table, path),
        None => write_stdout(&table.to_csv()),
    }
}

fn alpha(path: &Path) -> csl_fisher::Result<()> {
    let (csl, omega_m) = parse_csl_only(&read_text(path)?)?;
    let density = csl.density()?;
    let a = alpha_factor(&density, csl.r_c)?;
    let lambda = csl_diffusion_rate(&csl.params(omega_m), &density)?;
    write_stdout(&format!("alpha = {a:.11e}\nLambda = {lambda:.11e} 1/s\n"))
}

fn validate(path: &Path) -> csl_fisher::Result<bool> {
    let config = ScenarioConfig::from_path(path)?;
    let checks = scenario::validate(&config)?;
    let mut out = String::new();
    for c in &checks {
        let _ = writeln!(
            out,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    write_stdout(&out)?;
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let matches = Cli::command().after_long_help(key_table()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match &cli.verb {
        Verb::Transient(args) => run_verb(args, false).map(|_| true),
        Verb::SteadySweep(args) => run_verb(args, true).map(|_| true),
        Verb::Alpha { config } => alpha(config).map(|_| true),
        Verb::Validate { config } => validate(config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_PHYSICS),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
