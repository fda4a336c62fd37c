//! Temporal convergence studies against a fine-step reference, and one-step
//! order measurements of the nonlinear propagators against an ODE oracle.

use std::fmt::Write as _;
use std::path::Path;

use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;
use crate::log_flow::artanh;
use crate::spectral::Field;
use crate::stepper::{run_with, step_count, RunOptions, Scheme};

/// Result of a convergence study. `rates[k]` compares `taus[k]` with
/// `taus[k + 1]`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceReport {
    pub taus: Vec<f64>,
    /// `sqrt(h^d Σ d_j²)`
    pub errors: Vec<f64>,
    /// `sqrt(Σ d_j²)`
    pub errors_vec: Vec<f64>,
    /// `sqrt(N^{-d} Σ d_j²)`
    pub errors_rms: Vec<f64>,
    pub rates: Vec<f64>,
    pub reference_tau: f64,
    pub t_final: f64,
    pub summary: String,
}

impl ConvergenceReport {
    /// `tau,error_L2,error_vec,error_rms,rate`; the first row has an empty
    /// rate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,error_L2,error_vec,error_rms,rate\n");
        for i in 0..self.taus.len() {
            let rate = if i == 0 {
                String::new()
            } else {
                io::fmt_real(self.rates[i - 1])
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                io::fmt_real(self.taus[i]),
                io::fmt_real(self.errors[i]),
                io::fmt_real(self.errors_vec[i]),
                io::fmt_real(self.errors_rms[i]),
                rate
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.summary);
        let _ = writeln!(
            out,
            "# T = {}, reference tau = {:e}",
            self.t_final, self.reference_tau
        );
        let _ = writeln!(
            out,
            "{:>12}  {:>12}  {:>12}  {:>12}  {:>7}",
            "tau", "l2 error", "vec error", "rms error", "rate"
        );
        for i in 0..self.taus.len() {
            let rate = if i == 0 {
                "--".to_string()
            } else {
                format!("{:.3}", self.rates[i - 1])
            };
            let _ = writeln!(
                out,
                "{:>12.6e}  {:>12.4e}  {:>12.4e}  {:>12.4e}  {:>7}",
                self.taus[i], self.errors[i], self.errors_vec[i], self.errors_rms[i], rate
            );
        }
        out
    }
}

/// Discrete error norms `(L², vector, RMS)` of `a - b`.
pub fn error_norms(a: &Field, b: &Field) -> Result<(f64, f64, f64)> {
    let d = a.sub(b)?;
    let sum: f64 = d.values().iter().map(|v| v * v).sum();
    let grid = a.grid();
    Ok((
        (grid.cell_volume() * sum).sqrt(),
        sum.sqrt(),
        (sum / grid.len() as f64).sqrt(),
    ))
}

/// Observed orders `ln(e_k / e_{k+1}) / ln(τ_k / τ_{k+1})`.
pub fn observed_rates(taus: &[f64], errors: &[f64]) -> Vec<f64> {
    taus.windows(2)
        .zip(errors.windows(2))
        .map(|(t, e)| (e[0] / e[1]).ln() / (t[0] / t[1]).ln())
        .collect()
}

fn divides(t_final: f64, tau: f64) -> bool {
    let n = step_count(t_final, tau);
    n > 0 && ((n as f64 * tau - t_final).abs() <= 1e-9 * t_final)
}

fn march(u0: &Field, scheme: &Scheme, t_final: f64) -> Result<Field> {
    let opts = RunOptions::new(t_final, usize::MAX).without_energies();
    Ok(run_with(u0.clone(), scheme.clone(), &opts, |_, _| Ok(()))?.field)
}

fn scheme_key(scheme: &Scheme) -> String {
    match scheme {
        Scheme::Poly(s) => format!("polynomial eps={:e}", s.epsilon()),
        Scheme::Log(s) => {
            let p = s.params();
            format!(
                "logarithmic eps={:e} theta={:e} theta_c={:e} a={:e} tol={:e} maxit={} mode={:?}",
                p.epsilon, p.theta, p.theta_c, p.a, p.newton_tol, p.newton_max_iter, p.mode
            )
        }
    }
}

/// Cache key of a reference run: scheme, grid, initial data, step and time.
pub fn reference_key(u0: &Field, scheme: &Scheme, reference_tau: f64, t_final: f64) -> String {
    let g = u0.grid();
    let mut h = Sha256::new();
    h.update(scheme_key(scheme).as_bytes());
    h.update(format!(
        "|N={} L={:e} dim={} tau_ref={:e} T={:e}|",
        g.n(),
        g.length(),
        g.dim(),
        reference_tau,
        t_final
    ));
    for v in u0.values() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn reference_solution(
    u0: &Field,
    scheme: &Scheme,
    reference_tau: f64,
    t_final: f64,
    cache_dir: Option<&Path>,
) -> Result<Field> {
    let ref_scheme = scheme.with_tau(reference_tau)?;
    let Some(dir) = cache_dir else {
        return march(u0, &ref_scheme, t_final);
    };
    let key = reference_key(u0, scheme, reference_tau, t_final);
    let stem = dir.join(format!("reference-{key}"));
    if io::dump_exists(&stem) {
        let (field, _) = io::read_field_dump(&stem)?;
        if *field.grid().as_ref() == *u0.grid().as_ref() {
            info!("reusing cached reference {}", stem.display());
            return Field::new(u0.grid().clone(), field.into_values());
        }
    }
    let field = march(u0, &ref_scheme, t_final)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = io::DumpMeta::new(
        &field,
        step_count(t_final, reference_tau),
        t_final,
        scheme.potential_name(),
        serde_json::json!({ "key": key, "reference_tau": reference_tau }),
    );
    io::write_field_dump(&stem, &field, &meta)?;
    Ok(field)
}

/// Errors at `t_final` of runs with each `tau` against a `reference_tau` run
/// of the same scheme. `scheme`'s own step is ignored.
pub fn convergence_study(
    u0: &Field,
    scheme: &Scheme,
    taus: &[f64],
    reference_tau: f64,
    t_final: f64,
    cache_dir: Option<&Path>,
) -> Result<ConvergenceReport> {
    if taus.len() < 2 {
        return Err(Error::Study("need at least two step sizes".into()));
    }
    if !(t_final > 0.0) {
        return Err(Error::Study(format!("final time must be > 0, got {t_final}")));
    }
    let min_tau = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(reference_tau > 0.0 && reference_tau < min_tau / 10.0) {
        return Err(Error::Study(format!(
            "reference tau {reference_tau} must be below min(taus)/10 = {}",
            min_tau / 10.0
        )));
    }
    for &tau in taus.iter().chain(std::iter::once(&reference_tau)) {
        if !divides(t_final, tau) {
            return Err(Error::Study(format!(
                "T = {t_final} is not a whole number of steps of {tau}"
            )));
        }
    }

    let reference = reference_solution(u0, scheme, reference_tau, t_final, cache_dir)?;
    let mut errors = Vec::new();
    let mut errors_vec = Vec::new();
    let mut errors_rms = Vec::new();
    for &tau in taus {
        let u = march(u0, &scheme.with_tau(tau)?, t_final)?;
        let (l2, vec, rms) = error_norms(&u, &reference)?;
        if !(l2 > 0.0) {
            return Err(Error::Study(format!("zero error at tau = {tau}")));
        }
        info!("tau = {tau:e}: l2 error {l2:e}");
        errors.push(l2);
        errors_vec.push(vec);
        errors_rms.push(rms);
    }
    let g = u0.grid();
    Ok(ConvergenceReport {
        rates: observed_rates(taus, &errors),
        taus: taus.to_vec(),
        errors,
        errors_vec,
        errors_rms,
        reference_tau,
        t_final,
        summary: format!("{}, N={}, L={}, dim={}", scheme_key(scheme), g.n(), g.length(), g.dim()),
    })
}

/// Right-hand side of a scalar reaction ODE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OdeLaw {
    /// `u' = u - u³`
    Polynomial,
    /// `w' = θ_c w - θ artanh(w)`
    Logarithmic { theta: f64, theta_c: f64 },
}

impl OdeLaw {
    fn rhs(&self, u: f64) -> f64 {
        match *self {
            OdeLaw::Polynomial => u - u * u * u,
            OdeLaw::Logarithmic { theta, theta_c } => theta_c * u - theta * artanh(u),
        }
    }

    fn rk4(&self, v: f64, t: f64, substeps: usize) -> Result<f64> {
        let dt = t / substeps as f64;
        let mut u = v;
        let guard = |u: f64, k: usize| -> Result<()> {
            if matches!(self, OdeLaw::Logarithmic { .. }) && !(u.abs() < 1.0) {
                Err(Error::OracleDomain { t: k as f64 * dt })
            } else {
                Ok(())
            }
        };
        for k in 0..substeps {
            let k1 = self.rhs(u);
            let y2 = u + 0.5 * dt * k1;
            guard(y2, k)?;
            let k2 = self.rhs(y2);
            let y3 = u + 0.5 * dt * k2;
            guard(y3, k)?;
            let k3 = self.rhs(y3);
            let y4 = u + dt * k3;
            guard(y4, k)?;
            let k4 = self.rhs(y4);
            u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            guard(u, k + 1)?;
        }
        Ok(u)
    }
}

/// Flow of `law` from `v` over time `t` by composed classical RK4, doubling
/// `substeps` until two successive results agree to `1e-13` relative, then
/// Richardson-extrapolated.
pub fn ode_flow_oracle(law: OdeLaw, v: f64, t: f64, substeps: usize) -> Result<f64> {
    let mut m = substeps.max(1);
    let mut coarse = law.rk4(v, t, m)?;
    for _ in 0..12 {
        m *= 2;
        let fine = law.rk4(v, t, m)?;
        let diff = fine - coarse;
        if diff.abs() <= 1e-13 * fine.abs().max(1e-3) {
            return Ok(fine + diff / 15.0);
        }
        coarse = fine;
    }
    warn!("ODE oracle did not reach its tolerance at v = {v}, t = {t}");
    Ok(coarse)
}

/// Least-squares slope of `ln(max error)` against `ln τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
}

pub fn one_step_order(
    flow: impl Fn(f64, f64) -> Result<f64>,
    oracle: impl Fn(f64, f64) -> Result<f64>,
    taus: &[f64],
    samples: &[f64],
) -> Result<OrderFit> {
    let mut pts = Vec::new();
    let mut errors = Vec::new();
    for &tau in taus {
        let mut worst = 0.0_f64;
        for &v in samples {
            worst = worst.max((flow(v, tau)? - oracle(v, tau)?).abs());
        }
        errors.push(worst);
        if worst > 0.0 {
            pts.push((tau.ln(), worst.ln()));
        } else {
            warn!("zero one-step error at tau = {tau}; excluded from the fit");
        }
    }
    if pts.len() < 2 {
        return Ok(OrderFit {
            slope: f64::NAN,
            taus: taus.to_vec(),
            errors,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(OrderFit {
        slope: sxy / sxx,
        taus: taus.to_vec(),
        errors,
    })
}
