//! `monopole`: SU(2) monopole toolkit on the command line. Field export,
//! verification reports, spectral scans, rational scattering maps and the
//! Nahm round trip, each printing one JSON report line on stdout.
//!
//! Exit codes: 0 success, 2 validation failure (including checks over
//! threshold), 3 numeric failure, 4 I/O failure.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use monopole::{Error, Result};

use commands::{FieldSource, MapMode, NahmInit, OutputFormat, VerifySource};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "monopole",
    version,
    about = "BPS fields, spectral curves, rational maps and the Nahm transform for SU(2) monopoles"
)]
struct Cli {
    #[command(flatten)]
    common: CommonFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonFlags {
    /// Config file: flat key = value with [grid], [tolerances], [run].
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cube grid as N,MIN,MAX (points per axis, extent per axis).
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    /// ODE integrator tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Half-span of the line parameter in scattering problems.
    #[arg(long, global = true)]
    tmax: Option<f64>,
    /// Gauss-Legendre order of the inverse-Nahm quadrature.
    #[arg(long = "quad-order", global = true)]
    quad_order: Option<usize>,
    /// Seed for randomized spot checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Magnetic charge assumed by charge-dependent commands.
    #[arg(long, global = true)]
    charge: Option<u32>,
    /// Output directory (bps, nahm reconstruct) or artifact file path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact file format where a choice exists.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Export the closed-form unit-charge solution: volumes + radial profile.
    Bps {
        /// Monopole centre as X,Y,Z.
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        centre: String,
    },
    /// Run a verification suite and print its report.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifySource::BuiltinBps)]
        source: VerifySource,
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        centre: String,
        /// Volume file to check when --source volume.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Scan spectral lines and fit the spectral curve.
    Scan {
        #[arg(long, value_enum, default_value_t = FieldSource::BuiltinBps)]
        source: FieldSource,
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        centre: String,
    },
    /// Compute a rational scattering map.
    Rmap {
        #[arg(long, value_enum)]
        mode: MapMode,
        #[arg(long, value_enum, default_value_t = FieldSource::BuiltinBps)]
        source: FieldSource,
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        centre: String,
        /// Jarvis base point as X,Y,Z.
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        base: String,
        /// Donaldson pole-search disk radius in the z plane.
        #[arg(long = "z-radius", default_value_t = 3.0)]
        z_radius: f64,
    },
    /// Nahm flow: evolve initial data, fit its curve, invert to fields.
    #[command(subcommand)]
    Nahm(NahmCommand),
}

#[derive(Subcommand)]
enum NahmCommand {
    /// Integrate the flow and report conserved quantities.
    Evolve {
        #[arg(long, value_enum, default_value_t = NahmInit::Pole)]
        init: NahmInit,
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        centre: String,
        #[arg(long, default_value_t = -0.9, allow_negative_numbers = true)]
        z0: f64,
        #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
        z1: f64,
        /// Stored sample count along [z0, z1].
        #[arg(long, default_value_t = 41)]
        samples: usize,
    },
    /// Fit the spectral curve of builtin initial data.
    Curve {
        #[arg(long, value_enum, default_value_t = NahmInit::Point)]
        init: NahmInit,
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        centre: String,
    },
    /// Inverse transform of point data over the run grid.
    Reconstruct {
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        centre: String,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build_config(&cli.common)?;
    if let Some(n) = cfg.effective_threads()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("thread pool setup: {e}")))?;
    }
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Bps { centre } => {
            let centre = config::parse_point_flag(&centre)?;
            let dir = out.ok_or_else(|| Error::Validation("bps needs --out DIR".into()))?;
            emit(&commands::cmd_bps(&cfg, &centre, dir)?)
        }
        Command::Verify { source, centre, file } => {
            let centre = config::parse_point_flag(&centre)?;
            let report = commands::cmd_verify(&cfg, source, &centre, file.as_deref())?;
            emit(&report)?;
            if !report.passed {
                let failed: Vec<&str> =
                    report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
                return Err(Error::Validation(format!(
                    "verification failed: {}",
                    failed.join(", ")
                )));
            }
            Ok(())
        }
        Command::Scan { source, centre } => {
            let centre = config::parse_point_flag(&centre)?;
            emit(&commands::cmd_scan(&cfg, source, &centre, out, cli.common.format)?)
        }
        Command::Rmap { mode, source, centre, base, z_radius } => {
            let centre = config::parse_point_flag(&centre)?;
            let base = config::parse_point_flag(&base)?;
            emit(&commands::cmd_rmap(&cfg, mode, source, &centre, &base, z_radius, out)?)
        }
        Command::Nahm(NahmCommand::Evolve { init, centre, z0, z1, samples }) => {
            let centre = config::parse_point_flag(&centre)?;
            emit(&commands::cmd_nahm_evolve(&cfg, init, &centre, z0, z1, samples, out)?)
        }
        Command::Nahm(NahmCommand::Curve { init, centre }) => {
            let centre = config::parse_point_flag(&centre)?;
            emit(&commands::cmd_nahm_curve(init, &centre, out)?)
        }
        Command::Nahm(NahmCommand::Reconstruct { centre }) => {
            let centre = config::parse_point_flag(&centre)?;
            let dir =
                out.ok_or_else(|| Error::Validation("nahm reconstruct needs --out DIR".into()))?;
            let report = commands::cmd_nahm_reconstruct(&cfg, &centre, dir)?;
            emit(&report)?;
            if !report.passed {
                return Err(Error::Validation(format!(
                    "reconstruction off by {:.3e} with {} failed points",
                    report.max_higgs_deviation, report.failures
                )));
            }
            Ok(())
        }
    }
}

fn build_config(flags: &CommonFlags) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &flags.config {
        cfg.apply_file(&std::fs::read_to_string(path)?)?;
    }
    if let Some(shape) = &flags.grid {
        let (n, min, max) = config::parse_grid_flag(shape)?;
        cfg.grid_n = n;
        cfg.grid_min = min;
        cfg.grid_max = max;
    }
    if let Some(tol) = flags.tol {
        cfg.ode_tol = tol;
    }
    if let Some(t) = flags.tmax {
        cfg.t_max = t;
    }
    if let Some(q) = flags.quad_order {
        cfg.quad_order = q;
    }
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(k) = flags.charge {
        cfg.charge = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<T: serde::Serialize>(report: &T) -> Result<()> {
    let line = serde_json::to_string(report)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    println!("{line}");
    Ok(())
}
