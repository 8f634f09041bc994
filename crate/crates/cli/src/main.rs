//! `hybrid-moments`: brackets, equations of motion, simulation and
//! verification for moment-based quantum, classical and hybrid dynamics.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 verification failure, 5 I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hybrid_moments::BracketKind;

use commands::{CliError, OscillatorArgs, Scope, VerifyArgs};

#[derive(Parser)]
#[command(name = "hybrid-moments", version, about = "Moment dynamics for quantum, classical and hybrid systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Quantum,
    Classical,
    Hybrid,
}

impl From<KindArg> for BracketKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Quantum => BracketKind::Quantum,
            KindArg::Classical => BracketKind::Classical,
            KindArg::Hybrid => BracketKind::Hybrid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Identities,
    Brackets,
    Jacobi,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Bracket between two moments (`d[2,0;0,1]`) or centroids (`q1`, `p2`).
    Bracket {
        /// Sector split `<Nc>c<Nq>q`, e.g. `1c1q`.
        #[arg(long)]
        sig: String,
        #[arg(long, value_enum)]
        kind: KindArg,
        a: String,
        b: String,
    },
    /// Print the truncated equations of motion for a run configuration.
    Eom {
        config: PathBuf,
        /// Also print the effective Hamiltonian.
        #[arg(long)]
        hamiltonian: bool,
    },
    /// Integrate a run configuration; writes CSV and a JSON summary.
    Simulate { config: PathBuf },
    /// Closed-form classical–quantum oscillator pair as CSV.
    Oscillator {
        /// Larger normal frequency, as `3` or `sqrt(9)`.
        #[arg(long)]
        omega1: String,
        /// Smaller normal frequency, as `2` or `sqrt(8)`.
        #[arg(long)]
        omega2: String,
        /// Initial centroids as `q,p,x,k`.
        #[arg(long, value_delimiter = ',', default_value = "1,0,2,0", allow_negative_numbers = true)]
        ics: Vec<f64>,
        /// Initial quantum uncertainty; classical moments start at zero.
        #[arg(long, default_value_t = 1e-10)]
        u0: f64,
        /// ħ for the Heisenberg check (default `2√u0`).
        #[arg(long)]
        hbar: Option<f64>,
        /// End of the time grid.
        #[arg(long, default_value_t = 30.0)]
        t_end: f64,
        /// Number of intervals on the uniform time grid.
        #[arg(long, default_value_t = 30_000)]
        samples: usize,
        /// CSV destination (stdout if omitted).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Print the bound report as JSON (stdout, or stderr when the CSV goes to stdout).
        #[arg(long)]
        report: bool,
    },
    /// Run verification suites; JSON report on stdout, summary on stderr.
    Verify {
        #[arg(value_enum)]
        scope: ScopeArg,
        /// Largest exponent for the reordering identities.
        #[arg(long, default_value_t = 4)]
        max_exp: u32,
        /// Restrict the Jacobi check to one bracket kind.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Largest moment order for brackets and Jacobi checks.
        #[arg(long)]
        max_order: Option<u32>,
        /// Sector split for the Jacobi check.
        #[arg(long)]
        sig: Option<String>,
    },
}

fn emit_json(v: &serde_json::Value, path: Option<&PathBuf>, to_stderr: bool) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("report serializes");
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None if to_stderr => {
            eprintln!("{text}");
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bracket { sig, kind, a, b } => {
            println!("{}", commands::bracket(&sig, kind.into(), &a, &b)?);
        }
        Command::Eom { config, hamiltonian } => {
            let cfg = commands::load_config(&config)?;
            print!("{}", commands::eom(&cfg, hamiltonian)?);
        }
        Command::Simulate { config } => {
            let cfg = commands::load_config(&config)?;
            let summary = commands::simulate(&cfg)?;
            emit_json(&summary, cfg.output.summary.as_ref(), cfg.output.csv.is_none())?;
        }
        Command::Oscillator { omega1, omega2, ics, u0, hbar, t_end, samples, csv, report } => {
            let ics: [f64; 4] = ics.try_into().map_err(|v: Vec<f64>| {
                hybrid_moments::Error::InvalidConfig(format!("--ics needs 4 values, got {}", v.len()))
            })?;
            let to_stderr = csv.is_none();
            let args = OscillatorArgs { omega1, omega2, ics, u0, hbar, t_end, samples, csv, report };
            if let Some(r) = commands::oscillator(&args)? {
                emit_json(&r, None, to_stderr)?;
            }
        }
        Command::Verify { scope, max_exp, kind, max_order, sig } => {
            let scope = match scope {
                ScopeArg::Identities => Scope::Identities,
                ScopeArg::Brackets => Scope::Brackets,
                ScopeArg::Jacobi => Scope::Jacobi,
                ScopeArg::All => Scope::All,
            };
            let args = VerifyArgs { scope, max_exp, kind: kind.map(Into::into), max_order, sig };
            let report = match commands::verify(&args) {
                Ok(r) => r,
                Err(CliError::Verification(r)) => {
                    eprintln!("{}", commands::verify_text(&r));
                    emit_json(&r, None, false)?;
                    return Err(CliError::Verification(r));
                }
                Err(e) => return Err(e),
            };
            eprintln!("{}", commands::verify_text(&report));
            emit_json(&report, None, false)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Verification(_)) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
