//! `fraclat` command-line driver.

mod config;
mod experiments;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{Document, Experiment, Overrides};
use output::OutputDir;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn from_core(e: fraclat::Error) -> Self {
        if e.is_input() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fraclat", version, about = "Fractional lattice Schrödinger experiments")]
#[command(after_help = "Exit codes: 0 success, 2 config error, 3 numerical abort, 1 i/o error.\n\
Every output file begins with the resolved configuration (# lines in CSV, a \"config\" field in JSON,\n\
a comment in SVG) and is listed with its SHA-256 in manifest.json.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file (key = value lines under [run] and [<subcommand>] sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split-step run of the lattice equation from Gaussian data.
    #[command(after_help = "Keys [simulate]: alpha p mu h side n symbol (discrete|continuum|long-range) q radius dt\n\
t_final amplitude kx ky stride mass_abort nonlinear write_field\n\n\
observables.csv: t, mass, energy, supnorm, boundary_fraction\n\
field.csv: x1, x2, re, im (final field, when write_field = true)\n\
summary.json: steps, dt, mass_drift, energy_drift, max_boundary_fraction\n\
observables.svg (--plot): sup norm against t")]
    Simulate(Common),
    /// Continuum-limit error against a fine spectral reference.
    #[command(after_help = "Keys [limit-study]: alpha p mu hs h_ref side symbol q radius dt t_final amplitude kx ky\n\
stride mass_abort nonlinear quad_order\n\n\
errors.csv: h, n, l2_error, mass_drift, boundary_fraction\n\
fit.json: order, constant, residual, rate_upper_bound, h_ref, dt, reference_boundary_fraction, strictly_decreasing\n\
plot.svg (--plot): log-log error against h with the fitted line")]
    LimitStudy(Common),
    /// Lattice kernel supremum over dyadic scales and times, plus band constants.
    #[command(after_help = "Keys [dispersion-scan]: alphas scales taus bands band_base band_count tol budget\n\n\
scan.csv: alpha, N, band, tau, sup_abs_j, sigma, C, residual, m1, m2, status\n\
  one row per (alpha, N, tau); sigma, C, residual are the power-law fit over tau for that (alpha, N);\n\
  (m1, m2) is the lattice site attaining the supremum\n\
constants.csv (when bands is set): alpha, band, N, xi1, xi2, sigma0, sigma, prefactor, constant, abs_d0, taus, status\n\
summary.json: per-(alpha, N) fits\n\
decay.svg (--plot): log-log supremum against tau")]
    DispersionScan(Common),
    /// Degenerate curves and classification of their points.
    #[command(after_help = "Keys [manifold-scan]: alphas samples\n\n\
curves.csv: alpha, branch, a, b, xi1, xi2, residual, class, sigma0, d3, abs_d0, fold_proxy, status\n\
curves.svg (--plot): both branches in the (a, b) plane")]
    ManifoldScan(Common),
    /// Oscillatory integral at one critical point against its leading term.
    #[command(after_help = "Keys [asymptotics]: alpha xi1 xi2 taus radius1 radius2 flat tol budget\n\n\
asymptotics.csv: tau, re_j, im_j, abs_j, quad_error, scaled (= |J| tau^sigma0)\n\
summary.json: class, sigma0, newton_distance, d3, abs_d0, ratio_at_largest_tau, cauchy, fitted_sigma, ...\n\
decay.svg (--plot): log-log |J| against tau with the fit and the leading term")]
    Asymptotics(Common),
    /// Quick seeded consistency checks.
    #[command(after_help = "selftest.csv: check, description, value, tolerance, status")]
    Selftest(Common),
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let (experiment, common) = match cli.command {
        Command::Simulate(c) => (Experiment::Simulate, c),
        Command::LimitStudy(c) => (Experiment::LimitStudy, c),
        Command::DispersionScan(c) => (Experiment::DispersionScan, c),
        Command::ManifoldScan(c) => (Experiment::ManifoldScan, c),
        Command::Asymptotics(c) => (Experiment::Asymptotics, c),
        Command::Selftest(c) => (Experiment::Selftest, c),
    };
    let doc = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Document::parse(&text)?
        }
        None => Document::default(),
    };
    let ov = Overrides { seed: common.seed, threads: common.threads, out: common.out, plot: common.plot };
    let cfg = config::resolve(&doc, experiment, &ov)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start {} threads: {e}", cfg.run.threads)))?;
    let mut out = OutputDir::create(&cfg)?;
    eprintln!("{}: writing to {}", experiment.name(), out.path().display());
    experiments::run(&cfg, &mut out)?;
    let manifest = out.finish(&cfg, started)?;
    if manifest.failures.is_empty() {
        Ok(())
    } else {
        for f in &manifest.failures {
            eprintln!("  {}: {}", f.item, f.error);
        }
        Err(CliError::Numerical(format!("{} item(s) failed; partial results kept", manifest.failures.len())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fraclat: {e}");
            ExitCode::from(e.code())
        }
    }
}
