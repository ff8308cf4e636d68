//! `mhdreg`: config parsing, subcommand dispatch and output files for the
//! `mhd-regularity` toolkit.
//!
//! Exit codes: 0 on success, 1 on bad input, 2 on non-finite values or a
//! breached tolerance. Failures print one line `mhdreg: <kind>: <reason>`
//! to stderr.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::CliError;
pub use output::{emit_plot_data, read_plot_data};

#[derive(Debug, Parser)]
#[command(name = "mhdreg", version, about = "Pseudo-spectral MHD runs and pressure regularity diagnostics")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads for the numerical kernels.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output directory (for `pressure`: the output snapshot file).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides `init.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate from the configured initial state and record diagnostics.
    Simulate(SimulateArgs),
    /// Pressure monitors over a trajectory written by `simulate`.
    Diagnose(DiagnoseArgs),
    /// Recover the pressure of a `u, b` snapshot.
    Pressure(PressureArgs),
    /// Compare closed-form ball potentials against quadrature.
    VerifyKernels(VerifyKernelsArgs),
    /// Evaluate the weighted ball identities on a snapshot.
    VerifyIdentities(VerifyIdentitiesArgs),
    /// Scan log-weighted local integrals against their envelopes.
    LemmaCheck(LemmaCheckArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    TaylorGreen,
    Random,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// Directory written by `simulate` with binary snapshots.
    #[arg(long, value_name = "DIR")]
    traj: PathBuf,
    /// Defaults to `diagnostics.gamma`.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PressureMode {
    Periodic,
    Freespace,
}

#[derive(Debug, Args)]
struct PressureArgs {
    #[arg(long, value_enum, default_value = "periodic")]
    mode: PressureMode,
    #[arg(long = "in", value_name = "SNAPSHOT")]
    input: PathBuf,
    /// Padding factor of the free-space solve.
    #[arg(long, default_value_t = 2)]
    pad: usize,
}

#[derive(Debug, Args)]
struct VerifyKernelsArgs {
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    ratio_grid: Option<Vec<f64>>,
    /// Report file, relative to the output directory.
    #[arg(long, default_value = "kernels.csv")]
    report: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Debug, Args)]
struct VerifyIdentitiesArgs {
    /// Snapshot with `ux uy uz bx by bz` and optionally `p`; without `p`
    /// the free-space pressure is used.
    #[arg(long, value_name = "SNAPSHOT")]
    field: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Ball radius.
    #[arg(long = "R", value_name = "R")]
    radius: f64,
    /// Ball centers `x,y,z;x,y,z;...`, default the box center.
    #[arg(long)]
    centers: Option<String>,
    #[arg(long, default_value = "identities.csv")]
    report: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    L11,
    L12,
    Cor1,
}

#[derive(Debug, Args)]
struct LemmaCheckArgs {
    #[arg(long, value_enum)]
    which: Which,
    /// Defaults to `diagnostics.gamma`.
    #[arg(long)]
    gamma: Option<f64>,
    /// Snapshot(s) holding the scalar `f >= 0`; repeat for a time family.
    #[arg(long, value_name = "SNAPSHOT", required = true)]
    field: Vec<PathBuf>,
    /// Which field of each snapshot to use.
    #[arg(long, default_value_t = 0)]
    component: usize,
    /// Smallest dyadic radius, default three grid spacings.
    #[arg(long)]
    rmin: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    rmax: f64,
    /// Center stride in grid points.
    #[arg(long, default_value_t = 4)]
    centers: usize,
    #[arg(long, default_value = "lemma.csv")]
    report: PathBuf,
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code, printing failures to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match execute(argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mhdreg: {}", e.line());
            e.exit_code()
        }
    }
}

/// [`run`] without the printing.
pub fn execute<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("bad arguments");
            return Err(CliError::validation(first.trim_start_matches("error: ")));
        }
    };
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.init.seed = seed;
    }
    if let (Some(out), false) = (&cli.out, matches!(cli.command, Command::Pressure(_))) {
        cfg.output.dir = out.clone();
    }
    if let Command::Simulate(a) = &cli.command {
        apply_simulate_flags(&mut cfg, a);
    }
    cfg.validate()?;

    let threads = match cli.threads {
        Some(0) => return Err(CliError::validation("--threads must be at least 1")),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::validation(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(&cli, &cfg))
}

fn apply_simulate_flags(cfg: &mut RunConfig, a: &SimulateArgs) {
    if let Some(n) = a.n {
        cfg.grid.n = n;
    }
    if let Some(dt) = a.dt {
        cfg.solver.dt = dt;
    }
    if let Some(t) = a.t_end {
        cfg.solver.t_end = t;
    }
    if let Some(nu) = a.nu {
        cfg.solver.nu = nu;
    }
    if let Some(xi) = a.xi {
        cfg.solver.xi = xi;
    }
    match a.init {
        Some(InitArg::TaylorGreen) => cfg.init.kind = config::InitKind::TaylorGreen,
        Some(InitArg::Random) => cfg.init.kind = config::InitKind::Random,
        None => {}
    }
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(_) => commands::simulate(cfg),
        Command::Diagnose(a) => commands::diagnose(cfg, &a.traj, a.gamma.unwrap_or(cfg.diagnostics.gamma)),
        Command::Pressure(a) => {
            let out = cli
                .out
                .as_deref()
                .ok_or_else(|| CliError::validation("pressure needs --out SNAPSHOT"))?;
            let freespace = matches!(a.mode, PressureMode::Freespace);
            commands::pressure(&a.input, out, freespace, a.pad)
        }
        Command::VerifyKernels(a) => commands::verify_kernels(
            cfg,
            a.alpha_grid.as_deref(),
            a.ratio_grid.as_deref(),
            &a.report,
            a.tol,
        ),
        Command::VerifyIdentities(a) => {
            let centers = a.centers.as_deref().map(commands::parse_centers).transpose()?;
            commands::verify_identities(cfg, &a.field, a.alpha, a.radius, centers, &a.report, a.tol)
        }
        Command::LemmaCheck(a) => {
            let which = match a.which {
                Which::L11 => commands::Lemma::L11,
                Which::L12 => commands::Lemma::L12,
                Which::Cor1 => commands::Lemma::Cor1,
            };
            commands::lemma_check(
                cfg,
                commands::LemmaRequest {
                    which,
                    gamma: a.gamma.unwrap_or(cfg.diagnostics.gamma),
                    fields: &a.field,
                    component: a.component,
                    rmin: a.rmin,
                    rmax: a.rmax,
                    stride: a.centers,
                    report: &a.report,
                },
            )
        }
    }
}
