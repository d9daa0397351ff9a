//! The `conelab` command-line tool.

pub mod commands;
pub mod output;
pub mod sampling;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conelab_core::ConeError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl From<ConeError> for CliError {
    fn from(e: ConeError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "conelab", version, about = "Spectral, asymptotic and foliation analysis of minimal hypercones")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// `simons:p,q` or `file:<path>` holding a cone document.
    #[arg(long)]
    pub cone: Option<String>,
    /// Directory receiving artifacts and `meta.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long = "r-lo")]
    pub r_lo: Option<f64>,
    #[arg(long = "r-hi")]
    pub r_hi: Option<f64>,
    #[arg(long, default_value_t = 801)]
    pub points: usize,
}

#[derive(Args, Debug, Clone)]
pub struct FunctionArgs {
    /// Radial profile CSV with its `.json` sidecar; repeatable.
    #[arg(long)]
    pub profile: Vec<PathBuf>,
    /// Synthetic term `c,e` meaning `c r^e` on mode 1; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub power: Vec<String>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Ball,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EndArg {
    Tip,
    Infinity,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distinct cross-section eigenvalues with multiplicities.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
    /// Indicial roots of one mode.
    Indicial {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Stability class of the cone.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Mode table: eigenvalue, multiplicity and indicial roots.
    Modes {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
    /// Mode-wise solve of `L u = f` with weight-selected boundary conditions.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, value_enum)]
        domain: DomainArg,
        /// `k,phi,psi[,c,e]`: boundary value and derivative, optional source `c r^e`; repeatable.
        #[arg(long = "mode", required = true, allow_hyphen_values = true)]
        modes: Vec<String>,
        /// Coefficient of the perturbation `eps u / r^2` (requires zero boundary data).
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 200)]
        max_iter: usize,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Dirichlet eigenvalues on the truncated cone.
    Eigen {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long = "r-min")]
        r_min: Option<f64>,
    },
    /// First-mode Green's profile at the tip.
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        r2: f64,
        /// Constant potential `h`.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 20)]
        octaves: usize,
        #[arg(long = "per-octave", default_value_t = 16)]
        per_octave: usize,
    },
    /// Window integral `J^sigma(r, s)`.
    Jsigma {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        s: f64,
    },
    /// Hardy gap over seeded random compactly supported profiles.
    Hardy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
    },
    /// Window ratio `K0` with per-mode certificates.
    K0 {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[arg(long, value_enum, default_value_t = EndArg::Infinity)]
        end: EndArg,
    },
    /// Window monotonicity `J(Kr, K^2 r) < J(r, Kr)`.
    Monotone {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long = "ratio", default_value_t = 2.0)]
        ratio: f64,
        #[arg(long = "r-start", default_value_t = 1.0)]
        r_start: f64,
        #[arg(long, default_value_t = 6)]
        count: usize,
        #[arg(long, value_enum, default_value_t = EndArg::Infinity)]
        end: EndArg,
    },
    /// Asymptotic rate over dyadic windows, snapped to the indicial set.
    Rate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, value_enum)]
        end: EndArg,
        /// First window start.
        #[arg(long)]
        t0: f64,
        #[arg(long, default_value_t = 8)]
        windows: usize,
        #[arg(long = "snap-tol", default_value_t = 0.1)]
        snap_tol: f64,
        #[arg(long)]
        robust: bool,
    },
    /// Shoots a foliation leaf; writes `s,x,y,theta` to stdout or `profile.csv`.
    Foliate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long)]
        smax: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Shoot the leaf on the y-heavy side.
        #[arg(long)]
        reflect: bool,
    },
    /// Cone-line crossings of a profile CSV (`-` for stdin).
    Crossings {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "-")]
        profile: String,
    },
    /// Tail rate of a leaf graph with its strict/slow label.
    Leafrate {
        #[command(flatten)]
        common: Common,
        /// Profile CSV (`-` for stdin); when absent a fresh leaf is shot.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 1e4)]
        smax: f64,
        #[arg(long, default_value_t = 3.0)]
        decades: f64,
    },
    /// Separation of dilated copies of a leaf.
    Disjoint {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 1e3)]
        smax: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        scales: Vec<f64>,
    },
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs the tool on `argv`, writing to stdout/stderr, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    eprintln!("conelab: error[usage]: {}", one_line(&e.to_string()));
                    EXIT_USAGE
                }
                _ => {
                    eprintln!("conelab: error[validation]: {}", one_line(&e.to_string()));
                    EXIT_VALIDATION
                }
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("conelab: error[validation]: {e}");
        return EXIT_VALIDATION;
    }
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Validation(m)) => {
            eprintln!("conelab: error[validation]: {}", one_line(&m));
            EXIT_VALIDATION
        }
        Err(CliError::Io(m)) => {
            eprintln!("conelab: error[io]: {}", one_line(&m));
            EXIT_IO
        }
    }
}

/// Honors `CONELAB_THREADS` (0 or unset: one thread per core).
fn configure_threads() -> Result<(), String> {
    let n = match std::env::var("CONELAB_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("CONELAB_THREADS must be a non-negative integer, got {v:?}"))?,
        _ => 0,
    };
    // A second call within one process (as in tests) finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
