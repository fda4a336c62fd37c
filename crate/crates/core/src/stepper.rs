//! Strang composition `S_L(τ/2) ∘ S_N(τ) ∘ S_L(τ/2)` and the time loop.

use log::warn;

use crate::error::{Error, Result};
use crate::log_flow::{self, LogScheme, SchemeMode};
use crate::poly_flow::{self, PolyScheme};
use crate::spectral::{Field, HeatPropagator};

/// Slack on the discrete maximum principle.
pub const MAX_NORM_TOL: f64 = 1e-10;
/// Relative slack on modified-energy decay, scaled by `max(1, |E|)`.
pub const ENERGY_TOL: f64 = 1e-10;

/// Either potential, with its step size.
#[derive(Clone, Debug)]
pub enum Scheme {
    Poly(PolyScheme),
    Log(LogScheme),
}

impl From<PolyScheme> for Scheme {
    fn from(s: PolyScheme) -> Self {
        Scheme::Poly(s)
    }
}

impl From<LogScheme> for Scheme {
    fn from(s: LogScheme) -> Self {
        Scheme::Log(s)
    }
}

impl Scheme {
    pub fn tau(&self) -> f64 {
        match self {
            Scheme::Poly(s) => s.tau(),
            Scheme::Log(s) => s.tau(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Scheme::Poly(s) => s.epsilon(),
            Scheme::Log(s) => s.epsilon(),
        }
    }

    pub fn with_tau(&self, tau: f64) -> Result<Scheme> {
        Ok(match self {
            Scheme::Poly(s) => Scheme::Poly(s.with_tau(tau)?),
            Scheme::Log(s) => Scheme::Log(s.with_tau(tau)?),
        })
    }

    pub fn potential_name(&self) -> &'static str {
        match self {
            Scheme::Poly(_) => "polynomial",
            Scheme::Log(_) => "logarithmic",
        }
    }

    pub fn nonlinear_flow(&self, u: &Field) -> Result<Field> {
        match self {
            Scheme::Poly(s) => s.nonlinear_flow(u),
            Scheme::Log(s) => s.nonlinear_flow(u),
        }
    }

    pub fn standard_energy(&self, u: &Field) -> Result<f64> {
        match self {
            Scheme::Poly(s) => poly_flow::standard_energy(u, s.epsilon()),
            Scheme::Log(s) => log_flow::standard_energy_log(u, s.epsilon(), s.theta(), s.theta_c()),
        }
    }

    /// `Ẽⁿ` or `Ēⁿ` at the step value `uⁿ`.
    pub fn modified_energy(&self, u: &Field) -> Result<f64> {
        match self {
            Scheme::Poly(s) => poly_flow::modified_energy_poly(u, s),
            Scheme::Log(s) => log_flow::modified_energy_log(u, s),
        }
    }

    /// Whether modified-energy decay is a proven property for this scheme.
    pub fn energy_decay_guaranteed(&self) -> bool {
        match self {
            Scheme::Poly(_) => true,
            Scheme::Log(s) => s.mode() == SchemeMode::Strict,
        }
    }

    /// Rejects initial data outside the admissible set of the scheme.
    pub fn check_initial(&self, u0: &Field) -> Result<()> {
        if let Scheme::Log(s) = self {
            let norm = u0.max_abs();
            if norm > s.u_star() {
                return Err(Error::MaxNormExceeded {
                    value: norm,
                    bound: s.u_star(),
                });
            }
        }
        Ok(())
    }
}

/// Precomputed half-step propagator plus the scheme.
#[derive(Clone, Debug)]
pub struct StrangStepper {
    scheme: Scheme,
    half: HeatPropagator,
}

impl StrangStepper {
    pub fn new(scheme: Scheme, grid: &std::sync::Arc<crate::spectral::PeriodicGrid>) -> Result<Self> {
        let eps = scheme.epsilon();
        let half = HeatPropagator::new(grid.clone(), 0.5 * eps * eps * scheme.tau())?;
        Ok(StrangStepper { scheme, half })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn step(&self, u: &Field) -> Result<Field> {
        let a = self.half.apply(u)?;
        let b = self.scheme.nonlinear_flow(&a)?;
        self.half.apply(&b)
    }
}

/// One Strang step `uⁿ → uⁿ⁺¹`.
pub fn strang_step(u: &Field, scheme: &Scheme) -> Result<Field> {
    StrangStepper::new(scheme.clone(), u.grid())?.step(u)
}

/// Diagnostics at one recorded step.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyRecord {
    pub step: usize,
    pub time: f64,
    pub standard_energy: f64,
    pub modified_energy: f64,
    pub max_abs: f64,
    pub mean: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvariantPolicy {
    #[default]
    Abort,
    Warn,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub t_final: f64,
    pub record_every: usize,
    pub policy: InvariantPolicy,
    /// Skip energy evaluation entirely (convergence runs only need fields).
    pub record_energies: bool,
}

impl RunOptions {
    pub fn new(t_final: f64, record_every: usize) -> Self {
        RunOptions {
            t_final,
            record_every,
            policy: InvariantPolicy::Abort,
            record_energies: true,
        }
    }

    pub fn with_policy(mut self, policy: InvariantPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn without_energies(mut self) -> Self {
        self.record_energies = false;
        self
    }
}

/// Number of full steps that fit in `t_final`; a remainder within `1e-9`
/// relative counts as a whole step.
pub fn step_count(t_final: f64, tau: f64) -> usize {
    let ratio = t_final / tau;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.floor() as usize
    }
}

#[derive(Clone, Debug)]
pub struct SimulationState {
    pub field: Field,
    pub step: usize,
    pub scheme: Scheme,
    pub records: Vec<EnergyRecord>,
    /// Invariant violations tolerated under [`InvariantPolicy::Warn`].
    pub violations: Vec<String>,
}

impl SimulationState {
    pub fn time(&self) -> f64 {
        self.step as f64 * self.scheme.tau()
    }
}

fn record(scheme: &Scheme, u: &Field, step: usize) -> Result<EnergyRecord> {
    Ok(EnergyRecord {
        step,
        time: step as f64 * scheme.tau(),
        standard_energy: scheme.standard_energy(u)?,
        modified_energy: scheme.modified_energy(u)?,
        max_abs: u.max_abs(),
        mean: u.mean(),
    })
}

/// Marches `u0` to `T` with the default abort policy.
pub fn run(u0: Field, scheme: Scheme, t_final: f64, record_every: usize) -> Result<SimulationState> {
    run_with(u0, scheme, &RunOptions::new(t_final, record_every), |_, _| Ok(()))
}

/// Marches `u0` to `T`, calling `observe(step, field)` after every step
/// (and once for step 0).
pub fn run_with(
    u0: Field,
    scheme: Scheme,
    opts: &RunOptions,
    mut observe: impl FnMut(usize, &Field) -> Result<()>,
) -> Result<SimulationState> {
    if !(opts.t_final > 0.0) {
        return Err(Error::InvalidScheme(format!(
            "final time must be > 0, got {}",
            opts.t_final
        )));
    }
    if opts.record_every == 0 {
        return Err(Error::InvalidScheme("record_every must be >= 1".into()));
    }
    scheme.check_initial(&u0)?;
    let steps = step_count(opts.t_final, scheme.tau());
    let stepper = StrangStepper::new(scheme.clone(), u0.grid())?;

    let max_bound = match &scheme {
        Scheme::Poly(_) => Some(1.0_f64),
        Scheme::Log(s) if s.mode() == SchemeMode::Strict => Some(s.u_star()),
        Scheme::Log(_) => None,
    };
    let check_energy = scheme.energy_decay_guaranteed();

    let mut state = SimulationState {
        field: u0,
        step: 0,
        scheme,
        records: Vec::new(),
        violations: Vec::new(),
    };
    if opts.record_energies {
        state.records.push(record(&state.scheme, &state.field, 0)?);
    }
    observe(0, &state.field)?;

    let violation = |state: &mut SimulationState, step: usize, detail: String| -> Result<()> {
        match opts.policy {
            InvariantPolicy::Abort => Err(Error::Invariant { step, detail }),
            InvariantPolicy::Warn => {
                warn!("step {step}: {detail}");
                state.violations.push(format!("step {step}: {detail}"));
                Ok(())
            }
        }
    };

    for n in 1..=steps {
        let prev_norm = state.field.max_abs();
        let next = stepper.step(&state.field).map_err(|e| e.at_step(n))?;
        state.field = next;
        state.step = n;

        if let Some(bound) = max_bound {
            let limit = match &state.scheme {
                Scheme::Poly(_) => bound.max(prev_norm),
                Scheme::Log(_) => bound,
            };
            let norm = state.field.max_abs();
            if norm > limit + MAX_NORM_TOL {
                violation(
                    &mut state,
                    n,
                    format!("max norm {norm} exceeds bound {limit}"),
                )?;
            }
        }

        if opts.record_energies && (n % opts.record_every == 0 || n == steps) {
            let rec = record(&state.scheme, &state.field, n).map_err(|e| e.at_step(n))?;
            if check_energy {
                if let Some(prev) = state.records.last() {
                    let slack = ENERGY_TOL * prev.modified_energy.abs().max(1.0);
                    if rec.modified_energy > prev.modified_energy + slack {
                        let detail = format!(
                            "modified energy rose from {} to {}",
                            prev.modified_energy, rec.modified_energy
                        );
                        violation(&mut state, n, detail)?;
                    }
                }
            }
            state.records.push(rec);
        }
        observe(n, &state.field)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::ic_sine;
    use crate::log_flow::LogParams;
    use crate::spectral::{apply_heat_propagator, make_grid};
    use std::f64::consts::PI;

    fn poly(tau: f64) -> Scheme {
        PolyScheme::new(0.1, tau).unwrap().into()
    }

    fn log_scheme(tau: f64) -> Scheme {
        LogScheme::new(LogParams::new(0.1, tau, 0.25, 1.0)).unwrap().into()
    }

    #[test]
    fn equilibria_are_fixed() {
        let g = make_grid(16, 2.0 * PI, 2).unwrap();
        let zero = Field::constant(g.clone(), 0.0);
        assert_eq!(strang_step(&zero, &poly(0.1)).unwrap(), zero);
        assert_eq!(strang_step(&zero, &log_scheme(0.1)).unwrap(), zero);
        let one = Field::constant(g, 1.0);
        let out = strang_step(&one, &poly(0.5)).unwrap();
        for v in out.values() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn step_is_the_composition() {
        let g = make_grid(32, 2.0 * PI, 2).unwrap();
        let u0 = ic_sine(&g).unwrap();
        for scheme in [poly(0.05), log_scheme(0.05)] {
            let c = 0.5 * 0.1 * 0.1 * 0.05;
            let a = apply_heat_propagator(&u0, c).unwrap();
            let b = scheme.nonlinear_flow(&a).unwrap();
            let manual = apply_heat_propagator(&b, c).unwrap();
            assert_eq!(strang_step(&u0, &scheme).unwrap(), manual);
        }
    }

    #[test]
    fn tiny_step_is_near_identity() {
        let g = make_grid(16, 2.0 * PI, 2).unwrap();
        let u0 = ic_sine(&g).unwrap();
        let out = strang_step(&u0, &poly(1e-14)).unwrap();
        for (a, b) in out.values().iter().zip(u0.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn run_bookkeeping() {
        let g = make_grid(16, 2.0 * PI, 2).unwrap();
        let u0 = ic_sine(&g).unwrap();
        let tau = 0.01;
        let st = run(u0.clone(), poly(tau), 10.0 * tau, 1).unwrap();
        assert_eq!(st.records.len(), 11);
        for (i, r) in st.records.iter().enumerate() {
            assert_eq!(r.step, i);
            assert_eq!(r.time, i as f64 * tau);
        }
        let st = run(u0.clone(), poly(tau), 10.0 * tau, 3).unwrap();
        let steps: Vec<_> = st.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 3, 6, 9, 10]);
        // remainder is dropped
        let st = run(u0, poly(0.3), 1.0, 1).unwrap();
        assert_eq!(st.step, 3);
    }

    #[test]
    fn step_count_rounding() {
        assert_eq!(step_count(1.0, 0.1), 10);
        assert_eq!(step_count(2.0, 1.0 / 160.0), 320);
        assert_eq!(step_count(1.0, 0.3), 3);
        assert_eq!(step_count(1.0, 1e-4), 10_000);
    }

    #[test]
    fn log_run_rejects_large_data() {
        let g = make_grid(16, 2.0 * PI, 2).unwrap();
        let u0 = Field::constant(g, 0.9999);
        assert!(matches!(
            run(u0, log_scheme(0.01), 0.1, 1),
            Err(Error::MaxNormExceeded { .. })
        ));
    }

    #[test]
    fn deterministic_records() {
        let g = make_grid(16, 2.0 * PI, 2).unwrap();
        let u0 = crate::initial::ic_disk(&g).unwrap();
        let a = run(u0.clone(), log_scheme(0.05), 0.5, 2).unwrap();
        let b = run(u0, log_scheme(0.05), 0.5, 2).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.field, b.field);
    }
}
