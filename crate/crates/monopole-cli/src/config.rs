//! Run configuration: defaults, the flat `key = value` config file with
//! `[grid]`, `[tolerances]` and `[run]` sections, and the flag overrides.
//!
//! Precedence is defaults < config file < command-line flags; the
//! `MONOPOLE_THREADS` environment variable caps parallelism below whatever
//! the config asks for.

use monopole::volume::GridSpec;
use monopole::{Error, Point, Result};
use serde::Serialize;

/// Everything a command needs beyond its own arguments. Serialized into
/// reports so runs are reproducible from their output alone.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    /// Points per axis of the cube grid.
    pub grid_n: usize,
    /// Cube extent: the grid covers [min, max]³.
    pub grid_min: f64,
    pub grid_max: f64,
    /// ODE integrator tolerance for scattering and the Nahm flow.
    pub ode_tol: f64,
    /// Central-difference step for derivative checks.
    pub fd_step: f64,
    /// Gauss-Legendre order of the inverse-Nahm quadrature.
    pub quad_order: usize,
    /// Half-span of the line parameter in the scattering problem.
    pub t_max: f64,
    /// Magnetic charge assumed by charge-dependent commands.
    pub charge: u32,
    /// Seed for randomized spot checks.
    pub seed: u64,
    /// Optional parallelism cap from the config file.
    pub thread_cap: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid_n: 21,
            grid_min: -3.0,
            grid_max: 3.0,
            ode_tol: 1e-10,
            fd_step: 1e-3,
            quad_order: 96,
            t_max: 25.0,
            charge: 1,
            seed: 42,
            thread_cap: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::Validation("grid needs at least 2 points per axis".into()));
        }
        if !(self.grid_min < self.grid_max) {
            return Err(Error::Validation(format!(
                "grid extent is empty: min {} max {}",
                self.grid_min, self.grid_max
            )));
        }
        for (name, v) in [
            ("ode_tol", self.ode_tol),
            ("fd_step", self.fd_step),
            ("t_max", self.t_max),
        ] {
            if !(v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.quad_order == 0 {
            return Err(Error::Validation("quad_order must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let n = self.grid_n;
        let step = (self.grid_max - self.grid_min) / (n - 1) as f64;
        GridSpec::new(
            [n, n, n],
            [self.grid_min; 3],
            [step, step, step],
        )
    }

    /// Fold the config file in (if any), overriding the defaults.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (section, key, value) in parse_ini(text)? {
            let unknown = || {
                Error::Validation(format!("unknown config key [{section}] {key}"))
            };
            match section.as_str() {
                "grid" => match key.as_str() {
                    "n" => self.grid_n = parse(&value, "grid n")?,
                    "min" => self.grid_min = parse(&value, "grid min")?,
                    "max" => self.grid_max = parse(&value, "grid max")?,
                    _ => return Err(unknown()),
                },
                "tolerances" => match key.as_str() {
                    "ode_tol" => self.ode_tol = parse(&value, "ode_tol")?,
                    "fd_step" => self.fd_step = parse(&value, "fd_step")?,
                    "quad_order" => self.quad_order = parse(&value, "quad_order")?,
                    "t_max" => self.t_max = parse(&value, "t_max")?,
                    _ => return Err(unknown()),
                },
                "run" => match key.as_str() {
                    "charge" => self.charge = parse(&value, "charge")?,
                    "seed" => self.seed = parse(&value, "seed")?,
                    "threads" => self.thread_cap = Some(parse(&value, "threads")?),
                    _ => return Err(unknown()),
                },
                _ => return Err(Error::Validation(format!("unknown config section [{section}]"))),
            }
        }
        Ok(())
    }

    /// Effective thread count: config cap, further capped by
    /// MONOPOLE_THREADS. `None` leaves the pool at its default size.
    pub fn effective_threads(&self) -> Result<Option<usize>> {
        let env = match std::env::var("MONOPOLE_THREADS") {
            Ok(s) => Some(parse::<usize>(&s, "MONOPOLE_THREADS")?),
            Err(_) => None,
        };
        let cap = match (self.thread_cap, env) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if cap == Some(0) {
            return Err(Error::Validation("thread cap must be at least 1".into()));
        }
        Ok(cap)
    }
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Validation(format!("cannot parse {what} value {s:?}")))
}

/// Flat INI: `[section]` headers, `key = value` lines, `#` comments.
fn parse_ini(text: &str) -> Result<Vec<(String, String, String)>> {
    let mut section = String::new();
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Validation(format!(
                "config line {} is neither a section nor key = value: {raw:?}",
                lineno + 1
            )));
        };
        if section.is_empty() {
            return Err(Error::Validation(format!(
                "config line {} appears before any [section]",
                lineno + 1
            )));
        }
        entries.push((section.clone(), key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Grid flag `N,MIN,MAX`: N points per axis over the cube [MIN, MAX]³.
pub fn parse_grid_flag(s: &str) -> Result<(usize, f64, f64)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Validation(format!(
            "grid flag must be N,MIN,MAX, got {s:?}"
        )));
    }
    Ok((
        parse(parts[0], "grid N")?,
        parse(parts[1], "grid MIN")?,
        parse(parts[2], "grid MAX")?,
    ))
}

/// Point flag `X,Y,Z`.
pub fn parse_point_flag(s: &str) -> Result<Point> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Validation(format!(
            "point flag must be X,Y,Z, got {s:?}"
        )));
    }
    Ok(Point::new(
        parse(parts[0], "point X")?,
        parse(parts[1], "point Y")?,
        parse(parts[2], "point Z")?,
    ))
}
