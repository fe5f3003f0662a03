//! Command-line front end for `phaseint`.
//!
//! Exit codes: 0 success, 1 computed but failed verification, 2 could not
//! compute (bad input or a library error).

pub mod commands;
pub mod problem;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use problem::ProblemFile;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Library(#[from] phaseint::Error),
}

#[derive(Debug, Parser)]
#[command(name = "phaseint", version, about = "Phase-integral analysis in the complex plane")]
pub struct Cli {
    /// ODE and quadrature tolerance.
    #[arg(long, global = true, env = "PHASEINT_TOL")]
    pub tol: Option<f64>,
    /// Worker threads for parameter sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Stokes,
    Antistokes,
    All,
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    StokesFirst,
    PhaseFirst,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the Stokes diagram of a problem.
    Diagram {
        #[arg(short, long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        kind: Kind,
        /// Truncation radius.
        #[arg(long)]
        radius: Option<f64>,
        /// Also write the diagram as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Exact F-matrix along a path by direct integration.
    Fmatrix {
        #[arg(short, long)]
        problem: PathBuf,
        /// Path name in the problem file or a path JSON file.
        #[arg(long)]
        path: String,
        /// Basepoint `re,im`; defaults to the problem basepoint, then the path start.
        #[arg(long, allow_hyphen_values = true)]
        basepoint: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Weber-equation closed forms and the verification suite.
    Weber {
        /// `re` or `re,im`.
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        delta: String,
        #[arg(long)]
        json: bool,
        /// Run every Weber check and print a pass/fail table.
        #[arg(long)]
        verify: bool,
    },
    /// Check a symmetry transformation against oracle F-matrices.
    CheckSymmetry {
        #[arg(short, long)]
        problem: PathBuf,
        /// Transform name in the problem file or a transform JSON file.
        #[arg(long)]
        transform: String,
        /// Crossing path (name or file).
        #[arg(long)]
        gamma: String,
        /// Path followed by the basepoint under the homotopy (name or file).
        #[arg(long)]
        homotopy: Option<String>,
        /// Basepoint expression; defaults to the problem basepoint.
        #[arg(long, allow_hyphen_values = true)]
        z0: Option<String>,
        /// Constant names for the transformed and original domain.
        #[arg(long, default_value = "s_T,s")]
        domains: String,
        #[arg(long)]
        json: bool,
    },
    /// Reduce an operator word to canonical `S·W` form.
    Reduce {
        #[arg(short, long)]
        word: PathBuf,
        #[arg(long, value_enum, default_value = "stokes-first")]
        side: Side,
        #[arg(long)]
        json: bool,
    },
    /// Report everything the library would reject, up front.
    Validate {
        #[arg(short, long)]
        problem: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Parse arguments, run, print, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match commands::run(&cli) {
        Ok(out) => {
            if !out.stdout.is_empty() {
                use std::io::Write;
                // a closed pipe downstream is not an error of ours
                let _ = writeln!(std::io::stdout().lock(), "{}", out.stdout);
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Input(_)) {
                eprintln!("\n{}", problem::SCHEMA);
            }
            EXIT_INPUT
        }
    }
}
