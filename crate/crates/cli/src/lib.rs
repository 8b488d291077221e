//! Command-line front end for gkit-core. The binary is a thin wrapper over
//! [`main_with`]; [`run_captured`] executes a command in-process.
//!
//! Exit codes: 0 success, 1 input error, 2 resource limit (enumeration
//! limit, undecidable interval), 3 assertion failure.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gkit_core::config::KG_REAL_UPPER;
use gkit_core::{Constants, NormOptions};

#[derive(Debug, Parser)]
#[command(
    name = "gkit",
    version,
    about = "Grothendieck-bounded forms, tensors and kernel operators"
)]
pub struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Comparison tolerance (relative spreads, membership slack).
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Effective Grothendieck constant used for every "≤ K_G" test.
    #[arg(long, global = true, default_value_t = KG_REAL_UPPER)]
    kg: f64,
    /// Largest number of sign coordinates enumerated exhaustively.
    #[arg(long, global = true, default_value_t = 22)]
    enum_limit: usize,
    /// Worker threads; 0 or unset uses all cores.
    #[arg(long, global = true, env = "GKIT_THREADS")]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Norm certificate of a bilinear form on its declared domains.
    Norm { form: PathBuf },
    /// Projective tensor norm of an element of E ⊗ F.
    Projective {
        tensor: PathBuf,
        /// Take E and F from this form's domains.
        #[arg(long)]
        form: Option<PathBuf>,
    },
    /// Membership test ‖φ‖ ≤ kg.
    Grothendieck { form: PathBuf },
    /// Total variation of a discrete bimeasure against its (C, C) norm.
    Tv { form: PathBuf },
    /// Semidefinite relaxation value and its ratio to the exact norm.
    Sdp {
        form: PathBuf,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        /// Hyperplane roundings of the relaxation solution.
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Also write the unit-vector solution (CSV if the name ends in .csv).
        #[arg(long)]
        witness_file: Option<PathBuf>,
    },
    /// Hilbert-space factorization witness φ(e, f) = ⟨Ae, Bf⟩.
    Represent { form: PathBuf },
    /// Order-of-integration check for a bilinear form and a tensor element.
    Fubini {
        form: Option<PathBuf>,
        tensor: Option<PathBuf>,
        /// Random instance with these dimensions, e.g. `3,4`.
        #[arg(long, conflicts_with_all = ["form", "tensor"])]
        random: Option<String>,
        #[arg(long, default_value_t = 3)]
        terms: usize,
    },
    /// All integration orders of a multilinear form on a tensor element.
    Multifubini {
        form: Option<PathBuf>,
        element: Option<PathBuf>,
        /// Random instance with these dimensions, e.g. `3,4,2`.
        #[arg(long, conflicts_with_all = ["form", "element"])]
        random: Option<String>,
        #[arg(long, default_value_t = 3)]
        terms: usize,
    },
    /// Norm certificate and membership test for a multilinear form.
    Multinorm { form: PathBuf },
    /// Nyström discretization of a kernel: norms, refinement, spectrum.
    Kernel {
        /// Built-in name (inv1p, green1d, gauss(σ), const) or a kernel CSV.
        source: String,
        #[command(flatten)]
        grid: GridArgs,
        /// Report op_norm over n0, 2·n0, … up to --n.
        #[arg(long, num_args = 0..=1, default_missing_value = "64")]
        refine: Option<usize>,
        #[arg(long)]
        spectral: bool,
        /// Eigenvalues listed in the spectral report.
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Green's kernel of −u″ = f on [0, 1] with Dirichlet conditions.
    Green {
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value = "gauss-legendre")]
        rule: String,
        /// Fit the log–log eigenvalue decay over j ∈ [2, 20].
        #[arg(long)]
        weyl: bool,
        /// Second-difference check at n and 2n − 1 on uniform grids.
        #[arg(long)]
        consistency: bool,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Kernel composition and the three groupings of the triple integral.
    Compose {
        k1: String,
        k2: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Random input files.
    Gen {
        #[command(subcommand)]
        what: GenKind,
    },
    /// Parse an input file and re-emit it in canonical form.
    Canon {
        #[arg(value_enum)]
        kind: FileKind,
        file: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value = "gauss-legendre")]
    rule: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    b: f64,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Gaussian (or ±1 with --signs) bilinear form.
    Form {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value = "linf")]
        domain_e: String,
        #[arg(long, default_value = "linf")]
        domain_f: String,
        #[arg(long)]
        signs: bool,
    },
    /// Gaussian tensor element.
    Tensor {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 3)]
        terms: usize,
        #[arg(long, default_value = "l2")]
        domain_e: String,
        #[arg(long, default_value = "l2")]
        domain_f: String,
    },
    /// Gaussian multilinear form, e.g. `--dims 3,4,2`.
    Multi {
        #[arg(long)]
        dims: String,
        #[arg(long, default_value = "linf")]
        space: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Form,
    Tensor,
    Multi,
    Kernel,
    Witness,
}

/// Validated global settings.
pub struct RunConfig {
    pub tol: f64,
    pub seed: u64,
    pub constants: Constants,
    pub opts: NormOptions,
    pub format: Format,
}

/// A rendered report plus whether its assertions held.
pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

impl Outcome {
    pub fn ok(text: String) -> Self {
        Self { text, pass: true }
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    use gkit_core::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::EnumLimitExceeded { .. } | Error::InexactNorm { .. }) => 2,
        _ => 1,
    }
}

fn config(r: &RunArgs) -> Result<RunConfig> {
    if !(r.tol > 0.0 && r.tol.is_finite()) {
        anyhow::bail!("--tol must be positive");
    }
    Ok(RunConfig {
        tol: r.tol,
        seed: r.seed,
        constants: Constants::new(r.kg)?,
        opts: NormOptions {
            tol: r.tol,
            ..NormOptions::default()
        }
        .with_enum_limit(r.enum_limit)
        .with_seed(r.seed),
        format: r.format,
    })
}

/// Runs a parsed command on the current rayon pool and returns its report.
/// `--threads` and `--output` are left to the caller.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    commands::dispatch(&cli.cmd, &config(&cli.run)?)
}

/// Parses `args` (including the program name) and executes in-process.
/// Returns the exit code and the report text (empty on error).
pub fn run_captured<I, T>(args: I) -> (u8, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => return (if e.use_stderr() { 1 } else { 0 }, e.to_string()),
    };
    match execute(&cli) {
        Ok(out) => (if out.pass { 0 } else { 3 }, out.text),
        Err(e) => (exit_code(&e), String::new()),
    }
}

fn run(cli: Cli) -> Result<bool> {
    config(&cli.run)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.run.threads.unwrap_or(0))
        .build_global()
        .context("building the thread pool")?;
    let out = execute(&cli)?;
    match &cli.run.output {
        Some(p) => {
            std::fs::write(p, &out.text).with_context(|| format!("writing {}", p.display()))?
        }
        None => std::io::stdout().lock().write_all(out.text.as_bytes())?,
    }
    Ok(out.pass)
}

/// Entry point of the `gkit` binary.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
