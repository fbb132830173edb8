//! Run configuration: defaults, flat key=value config files, flag overrides.
//!
//! A run is fully described by a [`RunConfig`].  Values come from three
//! layers: built-in defaults, then an optional config file, then command
//! line flags (flags win).  The config file format is deliberately plain —
//! one `key = value` pair per line, `#` comments — so any language can
//! generate or parse it without a serialization library.

use std::path::PathBuf;

use cutplate::{BoundaryMode, Circle, ConfigError, Material, NitscheParams, Point, Rect, StudyConfig};

/// Coarsest admissible cell size on the finest level: runs beyond this are
/// not desk-scale experiments.
const MIN_FINEST_H: f64 = 1.0 / 1024.0;

/// Complete description of one convergence-study run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Young's modulus.
    pub e: f64,
    /// Poisson ratio.
    pub nu: f64,
    /// Plate thickness.
    pub t: f64,
    /// Uniform transverse pressure.
    pub p: f64,
    /// Plate radius.
    pub r: f64,
    /// Plate center.
    pub center: Point,
    /// Ghost-penalty scale (multiplies the bending stiffness).
    pub beta: f64,
    /// Nitsche penalty scale; the penalty is `gamma_scale * 2 kappa (1 + nu/(1-nu))`.
    pub gamma_scale: f64,
    /// Discrete-boundary smoothness.
    pub boundary_mode: BoundaryMode,
    /// Coarsest cell size; level `k` uses `h_start / 2^k`.
    pub h_start: f64,
    /// Number of refinement levels.
    pub levels: usize,
    /// Quadrature degree for assembly and error integration.
    pub quadrature_degree: usize,
    /// Directory receiving all artifacts.
    pub output_dir: PathBuf,
    /// Seed for perturbation experiments (echoed; the plain study is
    /// deterministic and does not consume it).
    pub seed: u64,
    /// Also write a gnuplot script drawing the convergence curves.
    pub emit_plot: bool,
}

impl Default for RunConfig {
    /// The reference configuration: a unit-pressure plate of radius 1/2
    /// centered in the unit square.
    fn default() -> RunConfig {
        RunConfig {
            e: 100.0,
            nu: 0.3,
            t: 0.1,
            p: 1.0,
            r: 0.5,
            center: Point::new(0.5, 0.5),
            beta: 0.1,
            gamma_scale: 100.0,
            boundary_mode: BoundaryMode::C1,
            h_start: 0.125,
            levels: 4,
            quadrature_degree: 8,
            output_dir: PathBuf::from("out"),
            seed: 0,
            emit_plot: false,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.to_string(), message: message.into() }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|_| invalid(key, format!("'{value}' is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| invalid(key, format!("'{value}' is not a non-negative integer")))
}

impl RunConfig {
    /// Apply one `key = value` pair.
    ///
    /// # Arguments
    ///
    /// * `key` - Configuration key (config-file spelling).
    /// * `value` - Unparsed value text.
    ///
    /// # Errors
    ///
    /// [`ConfigError::UnknownKey`] for an unrecognized key and
    /// [`ConfigError::InvalidValue`] for an unparsable value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "E" => self.e = parse_f64(key, value)?,
            "nu" => self.nu = parse_f64(key, value)?,
            "t" => self.t = parse_f64(key, value)?,
            "p" => self.p = parse_f64(key, value)?,
            "R" => self.r = parse_f64(key, value)?,
            "center" => {
                let (x, y) = value
                    .split_once(',')
                    .ok_or_else(|| invalid(key, format!("'{value}' is not of the form x,y")))?;
                self.center = Point::new(parse_f64(key, x.trim())?, parse_f64(key, y.trim())?);
            }
            "beta" => self.beta = parse_f64(key, value)?,
            "gamma_scale" => self.gamma_scale = parse_f64(key, value)?,
            "boundary_mode" => {
                self.boundary_mode = value.parse().map_err(|m: String| invalid(key, m))?;
            }
            "h_start" => self.h_start = parse_f64(key, value)?,
            "levels" => self.levels = parse_usize(key, value)?,
            "quadrature_degree" => self.quadrature_degree = parse_usize(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| invalid(key, format!("'{value}' is not a non-negative integer")))?;
            }
            "emit_plot" => {
                self.emit_plot = value
                    .parse()
                    .map_err(|_| invalid(key, format!("'{value}' is not true or false")))?;
            }
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    /// Apply a config file: one `key = value` per line, `#` comments.
    ///
    /// # Errors
    ///
    /// [`ConfigError::MalformedLine`] for a line without `=`, plus the
    /// per-pair errors of [`RunConfig::set`].
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::MalformedLine { line: idx + 1, text: raw.to_string() });
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Check all invariants.
    ///
    /// # Errors
    ///
    /// [`ConfigError::InvalidValue`] naming the first offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.e > 0.0) {
            return Err(invalid("E", "Young's modulus must be positive"));
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(invalid("nu", "Poisson ratio must lie in (-1, 0.5)"));
        }
        if !(self.t > 0.0) {
            return Err(invalid("t", "thickness must be positive"));
        }
        if !(self.r > 0.0) {
            return Err(invalid("R", "radius must be positive"));
        }
        if !(self.beta >= 0.0) {
            return Err(invalid("beta", "ghost-penalty scale must be non-negative"));
        }
        if !(self.gamma_scale >= 0.0) {
            return Err(invalid("gamma_scale", "penalty scale must be non-negative"));
        }
        if self.levels < 1 {
            return Err(invalid("levels", "at least one level is required"));
        }
        if !(self.h_start > 0.0) {
            return Err(invalid("h_start", "cell size must be positive"));
        }
        let finest = self.h_start / (1u64 << (self.levels - 1)) as f64;
        if finest < MIN_FINEST_H {
            return Err(invalid(
                "levels",
                format!("finest cell size {finest:.3e} is below the desk-scale limit {MIN_FINEST_H:.3e}"),
            ));
        }
        if self.quadrature_degree < 1 {
            return Err(invalid("quadrature_degree", "degree must be at least 1"));
        }
        Ok(())
    }

    /// The solver-facing study configuration (background grid on the unit
    /// square).
    pub fn study(&self) -> StudyConfig {
        StudyConfig {
            material: Material { e: self.e, nu: self.nu, thickness: self.t },
            pressure: self.p,
            plate: Circle::new(self.center, self.r),
            params: NitscheParams { gamma_scale: self.gamma_scale, beta: self.beta },
            bbox: Rect::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)),
            h_start: self.h_start,
            levels: self.levels,
            mode: self.boundary_mode,
            quad_degree: self.quadrature_degree,
        }
    }

    /// Echo the resolved configuration in config-file syntax.
    pub fn echo(&self) -> String {
        let mode = match self.boundary_mode {
            BoundaryMode::C0 => "c0",
            BoundaryMode::C1 => "c1",
        };
        format!(
            "E = {}\nnu = {}\nt = {}\np = {}\nR = {}\ncenter = {},{}\nbeta = {}\n\
             gamma_scale = {}\nboundary_mode = {}\nh_start = {}\nlevels = {}\n\
             quadrature_degree = {}\noutput_dir = {}\nseed = {}\nemit_plot = {}\n",
            self.e,
            self.nu,
            self.t,
            self.p,
            self.r,
            self.center.x,
            self.center.y,
            self.beta,
            self.gamma_scale,
            mode,
            self.h_start,
            self.levels,
            self.quadrature_degree,
            self.output_dir.display(),
            self.seed,
            self.emit_plot,
        )
    }
}

/// Worker-count cap from the `CUTPLATE_THREADS` environment variable.
///
/// Assembly currently runs serially, so any positive cap is honored
/// trivially; the resolved value is still validated and echoed so scripts
/// can rely on it.
///
/// # Errors
///
/// [`ConfigError::InvalidValue`] when the variable is set but not a
/// positive integer.
pub fn thread_cap() -> Result<Option<usize>, ConfigError> {
    match std::env::var("CUTPLATE_THREADS") {
        Err(_) => Ok(None),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(invalid("CUTPLATE_THREADS", format!("'{text}' is not a positive integer"))),
        },
    }
}
