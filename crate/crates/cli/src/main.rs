use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hamsym::verify::Method;
use hamsym_cli::commands::{self, RunOverrides};
use hamsym_cli::{Format, Globals, Outcome};

/// Classify infinitesimal symmetries of Hamiltonian systems and verify their conserved quantities.
#[derive(Parser)]
#[command(name = "hamsym", version)]
struct Cli {
    /// Seed for numeric probing.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Absolute tolerance of numeric zero tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Number of probe points per zero test.
    #[arg(long, global = true, default_value_t = 64)]
    probes: usize,
    /// Highest power of L(Y) explored by the classifier.
    #[arg(long, global = true, default_value_t = 6)]
    max_order: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a system file and print Hamilton's equations.
    Check { file: PathBuf },
    /// Classify the candidate symmetries declared in a system file.
    Classify {
        file: PathBuf,
        /// Only classify this candidate.
        #[arg(long)]
        symmetry: Option<String>,
    },
    /// Integrate the system and measure the drift of conserved quantities.
    Verify {
        file: PathBuf,
        /// Only track quantities emitted for this candidate.
        #[arg(long)]
        symmetry: Option<String>,
        /// Track this expression instead of the classifier output; repeatable.
        #[arg(long = "quantity")]
        quantities: Vec<String>,
        /// Initial state, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// rk4 or implicit_midpoint.
        #[arg(long)]
        method: Option<Method>,
        /// Write the trajectory table to this file.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// List the bundled example systems, or install them into a directory.
    Examples {
        #[arg(long, value_name = "DIR")]
        install: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = Globals {
        seed: cli.seed,
        tol: cli.tol,
        probes: cli.probes,
        max_order: cli.max_order,
        format: cli.format,
    };
    let out: Outcome = match &cli.command {
        Command::Check { file } => commands::check(file, &g),
        Command::Classify { file, symmetry } => commands::classify(file, symmetry.as_deref(), &g),
        Command::Verify {
            file,
            symmetry,
            quantities,
            x0,
            t_final,
            dt,
            method,
            trajectory,
        } => commands::verify(
            file,
            symmetry.as_deref(),
            quantities,
            &RunOverrides {
                x0: x0.clone(),
                t_final: *t_final,
                dt: *dt,
                method: *method,
            },
            trajectory.as_ref(),
            &g,
        ),
        Command::Examples { install } => commands::examples_cmd(install.as_deref()),
    };
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code)
}
