//! Configuration files and the command implementations behind the
//! `ac-strang` binary.
//!
//! A run is described by a TOML file; unknown keys are rejected. Example:
//!
//! ```toml
//! potential = "polynomial"
//! epsilon = 0.1
//! tau = 0.01
//! N = 128
//! T = 2.0
//! initial_condition = "sine"
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial;
use crate::io;
use crate::log_flow::{self, LogParams, LogScheme, SchemeMode, A_STRICT_MIN};
use crate::poly_flow::PolyScheme;
use crate::spectral::{make_grid, Field, PeriodicGrid};
use crate::stepper::{run_with, step_count, InvariantPolicy, RunOptions, Scheme, SimulationState};
use crate::verify::{self, ConvergenceReport};

/// Overrides `output_dir` from the config when set.
pub const OUTPUT_DIR_ENV: &str = "AC_STRANG_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Process exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Invariant { .. } => EXIT_INVARIANT,
        Error::NewtonFailure { .. }
        | Error::MaxNormExceeded { .. }
        | Error::ImaginaryResidue { .. }
        | Error::Quadrature(_)
        | Error::OracleDomain { .. }
        | Error::NonFinite { .. }
        | Error::Domain { .. } => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Potential {
    Polynomial,
    Logarithmic,
}

fn default_length() -> f64 {
    2.0 * PI
}

fn default_dim() -> usize {
    2
}

fn default_newton_tol() -> f64 {
    1e-12
}

fn default_newton_max_iter() -> usize {
    50
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Potential,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_c: Option<f64>,
    /// Runge–Kutta diagonal coefficient; defaults to `1 + √2/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Step size for `run`; `converge` uses `taus` instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L", default = "default_length")]
    pub length: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// `sine`, `disk`, `seven_circles` or `file:<stem>`.
    pub initial_condition: String,
    /// Defaults to 1 (polynomial) or 10 (logarithmic).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_mode")]
    pub mode: SchemeMode,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub invariant_policy: InvariantPolicy,
    /// Clip logarithmic initial data into `[-u_*, u_*]` instead of rejecting
    /// it.
    #[serde(default, skip_serializing_if = "is_false")]
    pub clip_initial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_tau: Option<f64>,
    /// Directory for cached reference solutions; defaults to
    /// `<output_dir>/reference-cache`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cache: Option<PathBuf>,
}

fn default_mode() -> SchemeMode {
    SchemeMode::Strict
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("<document>")
                .to_string();
            Error::config(field, e.message().trim().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.output_dir = PathBuf::from(dir);
            }
        }
        // relative file initial conditions resolve against the config's folder
        if let Some(rest) = cfg.initial_condition.strip_prefix("file:") {
            let p = Path::new(rest);
            if p.is_relative() {
                if let Some(parent) = path.parent() {
                    cfg.initial_condition = format!("file:{}", parent.join(p).display());
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn record_every(&self) -> usize {
        self.record_every.unwrap_or(match self.potential {
            Potential::Polynomial => 1,
            Potential::Logarithmic => 10,
        })
    }

    fn require_tau(&self) -> Result<f64> {
        self.tau
            .ok_or_else(|| Error::config("tau", "required by `run`"))
    }

    /// Cross-field checks; `tau` is the step the scheme will be built with.
    pub fn validate(&self, tau: f64) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be > 0, got {v}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("tau", tau)?;
        positive("L", self.length)?;
        positive("T", self.t_final)?;
        if self.n < 4 || self.n % 2 != 0 {
            return Err(Error::config("N", format!("must be even and >= 4, got {}", self.n)));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::config("dim", format!("must be 1 or 2, got {}", self.dim)));
        }
        if self.record_every() == 0 {
            return Err(Error::config("record_every", "must be >= 1"));
        }
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_final).contains(&t) {
                return Err(Error::config(
                    "snapshot_times",
                    format!("{t} is outside [0, T]"),
                ));
            }
        }
        if self.potential == Potential::Logarithmic {
            let (theta, theta_c) = self.temperatures()?;
            if !(theta > 0.0 && theta < theta_c) {
                return Err(Error::config(
                    "theta",
                    format!("theta must be < theta_c (theta = {theta}, theta_c = {theta_c})"),
                ));
            }
        }
        self.scheme(tau).map(|_| ())
    }

    fn temperatures(&self) -> Result<(f64, f64)> {
        let theta = self
            .theta
            .ok_or_else(|| Error::config("theta", "required for the logarithmic potential"))?;
        let theta_c = self
            .theta_c
            .ok_or_else(|| Error::config("theta_c", "required for the logarithmic potential"))?;
        Ok((theta, theta_c))
    }

    pub fn scheme(&self, tau: f64) -> Result<Scheme> {
        let wrap = |e: Error| match e {
            Error::InvalidScheme(m) => Error::config("tau/a/mode", m),
            Error::InvalidTemperatures { .. } => Error::config("theta", e.to_string()),
            e => e,
        };
        match self.potential {
            Potential::Polynomial => Ok(PolyScheme::new(self.epsilon, tau).map_err(wrap)?.into()),
            Potential::Logarithmic => {
                let (theta, theta_c) = self.temperatures()?;
                let params = LogParams::new(self.epsilon, tau, theta, theta_c)
                    .with_a(self.a.unwrap_or(A_STRICT_MIN))
                    .with_mode(self.mode)
                    .with_newton(self.newton_tol, self.newton_max_iter);
                Ok(LogScheme::new(params).map_err(wrap)?.into())
            }
        }
    }

    pub fn grid(&self) -> Result<std::sync::Arc<PeriodicGrid>> {
        make_grid(self.n, self.length, self.dim).map_err(|e| Error::config("N/L/dim", e.to_string()))
    }

    pub fn initial_field(&self, grid: &std::sync::Arc<PeriodicGrid>, scheme: &Scheme) -> Result<Field> {
        let ic = self.initial_condition.as_str();
        let field = match ic {
            "sine" => initial::ic_sine(grid),
            "disk" => initial::ic_disk(grid),
            "seven_circles" => initial::ic_seven_circles(grid, self.epsilon),
            _ => match ic.strip_prefix("file:") {
                Some(stem) => {
                    let (f, _) = io::read_field_dump(Path::new(stem))?;
                    if *f.grid().as_ref() != **grid {
                        return Err(Error::config(
                            "initial_condition",
                            format!("dump {stem} does not match N/L/dim"),
                        ));
                    }
                    Field::new(grid.clone(), f.into_values())
                }
                None => {
                    return Err(Error::config(
                        "initial_condition",
                        format!("unknown initial condition `{ic}`"),
                    ))
                }
            },
        }
        .map_err(|e| match e {
            Error::InvalidGrid(m) => Error::config("initial_condition", m),
            e => e,
        })?;
        match scheme {
            Scheme::Log(s) if field.max_abs() > s.u_star() => {
                if self.clip_initial {
                    let b = s.u_star();
                    info!("clipping initial data into [-{b}, {b}]");
                    field.map(|v| v.clamp(-b, b))
                } else {
                    Err(Error::config(
                        "initial_condition",
                        format!(
                            "max |u0| = {} exceeds u_* = {}; set clip_initial = true to clip",
                            field.max_abs(),
                            s.u_star()
                        ),
                    ))
                }
            }
            _ => Ok(field),
        }
    }

    fn params_json(&self, scheme: &Scheme) -> serde_json::Value {
        match scheme {
            Scheme::Poly(s) => serde_json::json!({ "epsilon": s.epsilon(), "tau": s.tau() }),
            Scheme::Log(s) => {
                let p = s.params();
                serde_json::json!({
                    "epsilon": p.epsilon, "tau": p.tau, "theta": p.theta,
                    "theta_c": p.theta_c, "a": p.a, "u_star": s.u_star(),
                    "newton_tol": p.newton_tol, "newton_max_iter": p.newton_max_iter,
                    "mode": p.mode,
                })
            }
        }
    }
}

/// What `cmd_run` produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub state: SimulationState,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Runs a simulation and writes `energy.csv`, field dumps and PGM snapshots
/// at `snapshot_times`, and a final dump.
pub fn cmd_run(config_path: &Path) -> Result<RunOutcome> {
    let cfg = RunConfig::load(config_path)?;
    run_config(&cfg)
}

pub fn run_config(cfg: &RunConfig) -> Result<RunOutcome> {
    let tau = cfg.require_tau()?;
    cfg.validate(tau)?;
    let grid = cfg.grid()?;
    let scheme = cfg.scheme(tau)?;
    let u0 = cfg.initial_field(&grid, &scheme)?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let cfg_path = out.join("config.toml");
    std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;

    let steps = step_count(cfg.t_final, tau);
    let mut snapshot_steps: BTreeMap<usize, f64> = BTreeMap::new();
    for &t in &cfg.snapshot_times {
        snapshot_steps.insert(step_count(t, tau).min(steps), t);
    }
    let params = cfg.params_json(&scheme);
    let potential = scheme.potential_name();
    let mut files = vec![cfg_path];

    let opts = RunOptions::new(cfg.t_final, cfg.record_every()).with_policy(cfg.invariant_policy);
    let state = run_with(u0, scheme.clone(), &opts, |step, field| {
        if snapshot_steps.contains_key(&step) {
            let stem = out.join(format!("field_{step:08}"));
            let meta = io::DumpMeta::new(field, step, step as f64 * tau, potential, params.clone());
            io::write_field_dump(&stem, field, &meta)?;
            let pgm = out.join(format!("snapshot_{step:08}.pgm"));
            io::write_pgm(&pgm, field, 1.0)?;
            files.push(stem);
            files.push(pgm);
        }
        Ok(())
    })?;

    let csv = out.join("energy.csv");
    io::write_energy_csv(&csv, &state.records)?;
    files.push(csv);
    let stem = out.join("final");
    let meta = io::DumpMeta::new(&state.field, state.step, state.time(), potential, params);
    io::write_field_dump(&stem, &state.field, &meta)?;
    files.push(stem);
    info!(
        "{} steps, final time {}, {} records",
        state.step,
        state.time(),
        state.records.len()
    );
    Ok(RunOutcome {
        state,
        output_dir: out,
        files,
    })
}

/// Runs a convergence study and writes `convergence.csv` and
/// `convergence.txt`.
pub fn cmd_converge(config_path: &Path) -> Result<ConvergenceReport> {
    let cfg = RunConfig::load(config_path)?;
    converge_config(&cfg)
}

pub fn converge_config(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let taus = cfg
        .taus
        .clone()
        .ok_or_else(|| Error::config("taus", "required by `converge`"))?;
    let reference_tau = cfg
        .reference_tau
        .ok_or_else(|| Error::config("reference_tau", "required by `converge`"))?;
    for &tau in taus.iter().chain(std::iter::once(&reference_tau)) {
        cfg.validate(tau)?;
    }
    let grid = cfg.grid()?;
    let scheme = cfg.scheme(taus[0])?;
    let u0 = cfg.initial_field(&grid, &scheme)?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let cache = cfg
        .reference_cache
        .clone()
        .unwrap_or_else(|| out.join("reference-cache"));
    let report = verify::convergence_study(&u0, &scheme, &taus, reference_tau, cfg.t_final, Some(&cache))
        .map_err(|e| match e {
            Error::Study(m) => Error::config("taus", m),
            e => e,
        })?;
    let csv = out.join("convergence.csv");
    std::fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))?;
    let txt = out.join("convergence.txt");
    std::fs::write(&txt, report.to_table()).map_err(|e| Error::io(&txt, e))?;
    Ok(report)
}

/// `u_*` with bracketing residuals, plus diagnostics of the `F̄` table for a
/// strict-mode scheme with step `tau` (default: the smaller of `0.01` and
/// the strict bound) and coefficient `a`.
pub fn cmd_ustar(theta: f64, theta_c: f64, tau: Option<f64>, a: Option<f64>) -> Result<String> {
    if !(theta > 0.0 && theta < theta_c) {
        return Err(Error::config(
            "theta",
            format!("theta must be < theta_c (theta = {theta}, theta_c = {theta_c})"),
        ));
    }
    let u = log_flow::find_ustar(theta, theta_c)?;
    let g = |x: f64| log_flow::g_log(x, theta, theta_c);
    let mut out = String::new();
    let _ = writeln!(out, "u_* = {u:.12}");
    let _ = writeln!(out, "g(u_*) = {:e}", g(u)?);
    for d in [1e-6, 1e-9] {
        let _ = writeln!(
            out,
            "g(u_* - {d:e}) = {:+e}, g(u_* + {d:e}) = {:+e}",
            g(u - d)?,
            g(u + d)?
        );
    }
    let a = a.unwrap_or(A_STRICT_MIN);
    let bound = 1.0 / (3.0 * a * (theta_c - theta));
    let tau = tau.unwrap_or(bound.min(0.01));
    let scheme = LogScheme::new(LogParams::new(1.0, tau, theta, theta_c).with_a(a))
        .map_err(|e| Error::config("tau", e.to_string()))?;
    let table = scheme.fbar_table()?;
    let values = table.values();
    let (imin, vmin) = values
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut max_curv = f64::NEG_INFINITY;
    for &x in table.nodes() {
        max_curv = max_curv.max(scheme.fbar_second(x)?);
    }
    let _ = writeln!(out, "F̄ table: tau = {tau}, a = {a}, {} nodes on [0, u_*]", values.len());
    let _ = writeln!(out, "F̄(u_*) = {:.12e}", values[values.len() - 1]);
    let _ = writeln!(out, "min F̄ = {vmin:.12e} at u = {:.12}", table.nodes()[imin]);
    let _ = writeln!(out, "max F̄'' = {max_curv:.6e} (bound 2/tau = {:.6e})", 2.0 / tau);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const POLY: &str = r#"
potential = "polynomial"
epsilon = 0.1
tau = 0.01
N = 16
T = 0.1
initial_condition = "sine"
"#;

    #[test]
    fn parse_and_round_trip() {
        let cfg = RunConfig::from_toml(POLY).unwrap();
        assert_eq!(cfg.length, 2.0 * PI);
        assert_eq!(cfg.record_every(), 1);
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(RunConfig::from_toml(&again.to_toml()).unwrap(), again);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = format!("{POLY}\nepsilonn = 0.2\n");
        match RunConfig::from_toml(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "epsilonn"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn temperature_ordering_is_checked() {
        let text = POLY.replace("polynomial", "logarithmic") + "theta = 1.0\ntheta_c = 0.5\n";
        let cfg = RunConfig::from_toml(&text).unwrap();
        match cfg.validate(0.01) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "theta"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(cmd_ustar(1.0, 0.5, None, None).is_err());
    }

    #[test]
    fn strict_tau_bound_is_enforced() {
        let text = POLY.replace("polynomial", "logarithmic").replace("tau = 0.01", "tau = 0.5")
            + "theta = 0.25\ntheta_c = 1.0\n";
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert!(matches!(cfg.validate(0.5), Err(Error::Config { .. })));
    }

    #[test]
    fn ustar_report() {
        let text = cmd_ustar(0.25, 1.0, None, None).unwrap();
        let first = text.lines().next().unwrap();
        let u: f64 = first.trim_start_matches("u_* = ").parse().unwrap();
        assert!((u - 0.99933).abs() <= 1e-5, "{text}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("x", "y")), EXIT_CONFIG);
        let inv = Error::Invariant {
            step: 3,
            detail: String::new(),
        };
        assert_eq!(exit_code(&inv), EXIT_INVARIANT);
        let newton = Error::NewtonFailure {
            v: 0.1,
            iterations: 50,
            residual: 1.0,
        }
        .at_step(4);
        assert_eq!(exit_code(&newton), EXIT_SOLVER);
    }
}
