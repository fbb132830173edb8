//! Command-line driver for the cut-cell plate convergence study.
//!
//! Resolves a run configuration (defaults, config file, flags — flags win),
//! solves the refinement sequence, and writes `convergence.csv`, `run.log`,
//! one `solution_<level>.txt` elevation table per level, and optionally a
//! `plot.gp` gnuplot script.  Exit codes: 0 on success, 2 on geometry
//! failures, 3 on solver failures, 4 on configuration errors.

mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use cutplate::verify::{fitted_slopes, solve_level, LevelReport, LevelSolution};
use cutplate::{Error, GeometryError, SolverError};

use config::{thread_cap, RunConfig};

/// Cut finite element convergence study for a simply supported circular
/// plate under uniform pressure.
#[derive(Debug, Parser)]
#[command(name = "cutplate", version, about)]
struct Cli {
    /// Config file (flat key=value lines); flags override its entries.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Young's modulus.
    #[arg(long = "E", value_name = "VAL")]
    e: Option<f64>,
    /// Poisson ratio.
    #[arg(long, value_name = "VAL")]
    nu: Option<f64>,
    /// Plate thickness.
    #[arg(long, value_name = "VAL")]
    t: Option<f64>,
    /// Uniform transverse pressure.
    #[arg(long, value_name = "VAL")]
    p: Option<f64>,
    /// Plate radius.
    #[arg(long = "R", value_name = "VAL")]
    r: Option<f64>,
    /// Ghost-penalty scale.
    #[arg(long, value_name = "VAL")]
    beta: Option<f64>,
    /// Nitsche penalty scale.
    #[arg(long, value_name = "VAL")]
    gamma_scale: Option<f64>,
    /// Discrete-boundary smoothness: c0 or c1.
    #[arg(long, value_name = "MODE")]
    boundary_mode: Option<String>,
    /// Coarsest cell size.
    #[arg(long, value_name = "VAL")]
    h_start: Option<f64>,
    /// Number of refinement levels.
    #[arg(long, value_name = "N")]
    levels: Option<usize>,
    /// Quadrature degree.
    #[arg(long, value_name = "N")]
    quad_degree: Option<usize>,
    /// Output directory.
    #[arg(long = "out", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write a gnuplot script drawing the convergence curves.
    #[arg(long)]
    emit_plot: bool,
}

impl Cli {
    /// Layer this invocation onto defaults: config file first, flags last.
    fn resolve(self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(cutplate::ConfigError::Io)?;
            cfg.apply_file(&text)?;
        }
        if let Some(v) = self.e {
            cfg.e = v;
        }
        if let Some(v) = self.nu {
            cfg.nu = v;
        }
        if let Some(v) = self.t {
            cfg.t = v;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.gamma_scale {
            cfg.gamma_scale = v;
        }
        if let Some(v) = &self.boundary_mode {
            cfg.boundary_mode = v.parse().map_err(|m: String| {
                cutplate::ConfigError::InvalidValue { key: "boundary_mode".to_string(), message: m }
            })?;
        }
        if let Some(v) = self.h_start {
            cfg.h_start = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.quad_degree {
            cfg.quadrature_degree = v;
        }
        if let Some(v) = self.out {
            cfg.output_dir = v;
        }
        if self.emit_plot {
            cfg.emit_plot = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Short machine-parsable code for an error (its variant name).
fn error_code(err: &Error) -> &'static str {
    match err {
        Error::Geometry(g) => match g {
            GeometryError::AmbiguousCut { .. } => "AmbiguousCut",
            GeometryError::RootNoConvergence { .. } => "RootNoConvergence",
            GeometryError::DegenerateTriangle { .. } => "DegenerateTriangle",
            GeometryError::NonPositiveJacobian { .. } => "NonPositiveJacobian",
            GeometryError::OpenLoop { .. } => "OpenLoop",
            GeometryError::OrphanSliver { .. } => "OrphanSliver",
            GeometryError::NoInteriorCell { .. } => "NoInteriorCell",
        },
        Error::Solver(s) => match s {
            SolverError::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            SolverError::IterationLimit { .. } => "IterationLimit",
            SolverError::EstimateNoConvergence => "EstimateNoConvergence",
        },
        Error::Config(c) => match c {
            cutplate::ConfigError::UnknownKey { .. } => "UnknownKey",
            cutplate::ConfigError::InvalidValue { .. } => "InvalidValue",
            cutplate::ConfigError::MalformedLine { .. } => "MalformedLine",
            cutplate::ConfigError::Io(_) => "Io",
        },
        Error::Io(_) => "Io",
    }
}

/// Process exit code for an error class.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Geometry(_) => 2,
        Error::Solver(_) => 3,
        Error::Config(_) | Error::Io(_) => 4,
    }
}

/// Execute a resolved run: solve all levels and write the artifacts.
fn run(cfg: &RunConfig) -> Result<(), Error> {
    let cap = thread_cap()?;
    let clock = Instant::now();
    fs::create_dir_all(&cfg.output_dir)?;

    let mut log = String::from("cutplate convergence study\n\nconfig:\n");
    for line in cfg.echo().lines() {
        log.push_str(&format!("  {line}\n"));
    }
    log.push_str(&match cap {
        Some(n) => format!("  threads = {n} (cap from CUTPLATE_THREADS; assembly runs serially)\n"),
        None => "  threads = 1 (CUTPLATE_THREADS unset; assembly runs serially)\n".to_string(),
    });
    log.push('\n');

    let study = cfg.study();
    let mut solutions: Vec<LevelSolution> = Vec::with_capacity(cfg.levels);
    for level in 0..cfg.levels {
        let sol = solve_level(&study, level)?;
        let line = output::level_line(&sol.report);
        println!("{line}");
        log.push_str(&line);
        log.push('\n');
        solutions.push(sol);
    }
    let reports: Vec<LevelReport> = solutions.iter().map(|s| s.report).collect();

    if cfg.levels >= 2 {
        let line = output::slopes_line(&fitted_slopes(&reports));
        println!("{line}");
        log.push_str(&line);
        log.push('\n');
    }

    fs::write(cfg.output_dir.join("convergence.csv"), output::convergence_csv(&reports))?;
    for sol in &solutions {
        let name = format!("solution_{}.txt", sol.report.level);
        fs::write(cfg.output_dir.join(name), output::solution_grid(sol))?;
    }
    if cfg.emit_plot {
        fs::write(cfg.output_dir.join("plot.gp"), output::plot_script(&reports))?;
    }

    log.push_str(&format!("\ntotal time: {:.3} s\n", clock.elapsed().as_secs_f64()));
    fs::write(cfg.output_dir.join("run.log"), log)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(4);
        }
    };
    let outcome = cli.resolve().and_then(|cfg| run(&cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}: {err}", error_code(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
