//! Flory–Huggins (logarithmic) potential.
//!
//! The reaction term is `g(u) = θ_c u - θ artanh(u)`, whose positive root
//! `u_*` bounds the solution. The nonlinear sub-flow `∂_t w = g(w)` has no
//! closed form and is replaced by the two-stage diagonally implicit
//! Runge–Kutta method with tableau
//!
//! ```text
//!   a   |  a      0
//!  1-a  | 1-2a    a
//!  -----+-----------
//!       | 1/2    1/2
//! ```
//!
//! Each stage reduces to a scalar equation `H(u) = target` with
//! `H(u) = u - aτ g(u)`, which is solved per grid point by Newton's method
//! started from `sign(v) u_*`. The scheme dissipates a modified energy whose
//! potential `F̄` is only known through its derivative
//! `F̄'(u) = -(g(u₁(u)) + g(u₂(u))) / 2`; it is tabulated once per scheme.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::poly_flow::{gradient_energy, splitting_quadratic};
use crate::quadrature::GaussLegendre;
use crate::spectral::{apply_heat_propagator, Field};

/// Inputs with `u_* < |v| ≤ u_* + MAX_NORM_SLACK` are treated as `±u_*`.
pub const MAX_NORM_SLACK: f64 = 1e-12;

const DOMAIN_EDGE: f64 = 1.0 - 1e-15;
const STALL_LIMIT: usize = 5;
const BISECTION_CAP: usize = 200;

/// Diagonal coefficient for which the maximum principle and the energy law
/// are both proven.
pub const A_STRICT_MIN: f64 = 1.0 + FRAC_1_SQRT_2;

/// Diagonal coefficient turning the tableau into Crouzeix's third-order
/// method.
pub fn crouzeix_a() -> f64 {
    0.5 + 3.0_f64.sqrt() / 6.0
}

/// `artanh(u)` via `log1p`, accurate close to `±1`.
pub fn artanh(u: f64) -> f64 {
    0.5 * (u.ln_1p() - (-u).ln_1p())
}

fn check_open_unit(u: f64) -> Result<()> {
    if u.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            value: u,
            domain: "(-1, 1)",
        })
    }
}

/// `g(u) = θ_c u - θ artanh(u)`.
pub fn g_log(u: f64, theta: f64, theta_c: f64) -> Result<f64> {
    check_open_unit(u)?;
    Ok(g_unchecked(u, theta, theta_c))
}

#[inline]
fn g_unchecked(u: f64, theta: f64, theta_c: f64) -> f64 {
    theta_c * u - theta * artanh(u)
}

#[inline]
fn g_prime(u: f64, theta: f64, theta_c: f64) -> f64 {
    theta_c - theta / ((1.0 - u) * (1.0 + u))
}

fn check_temperatures(theta: f64, theta_c: f64) -> Result<()> {
    if theta > 0.0 && theta < theta_c && theta_c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTemperatures { theta, theta_c })
    }
}

/// Positive root of `g` in `(0, 1)`.
///
/// Sixty bisection steps on `(0, 1 - 1e-15]` followed by up to five Newton
/// corrections; the float with the smallest residual among the final iterate
/// and its neighbours is returned.
pub fn find_ustar(theta: f64, theta_c: f64) -> Result<f64> {
    check_temperatures(theta, theta_c)?;
    let g = |u: f64| g_unchecked(u, theta, theta_c);
    // g > 0 on (0, u_*), g < 0 on (u_*, 1)
    let (mut lo, mut hi) = (0.0_f64, DOMAIN_EDGE);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..5 {
        let r = g(u);
        if r == 0.0 {
            break;
        }
        let next = u - r / g_prime(u, theta, theta_c);
        if !(next > 0.0 && next < DOMAIN_EDGE) || next == u {
            break;
        }
        u = next;
    }
    let candidates = [f64_prev(u), u, f64_next(u)];
    let best = candidates
        .into_iter()
        .filter(|c| *c > 0.0 && *c < 1.0)
        .min_by(|a, b| g(*a).abs().total_cmp(&g(*b).abs()))
        .unwrap_or(u);
    Ok(best)
}

fn f64_next(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn f64_prev(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// Which parameter regime a [`LogScheme`] is validated against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeMode {
    /// `a ≥ 1 + √2/2`, `τ ≤ 1/(3a(θ_c - θ))`: maximum principle and modified
    /// energy dissipation both hold.
    Strict,
    /// `a ≥ 1/2`, `τ ≤ 1/((3a - 1)(θ_c - θ))`: the stage equations are
    /// uniquely solvable, nothing more.
    Solvable,
}

/// Raw parameters for [`LogScheme::new`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogParams {
    pub epsilon: f64,
    pub tau: f64,
    pub theta: f64,
    pub theta_c: f64,
    pub a: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub mode: SchemeMode,
}

impl LogParams {
    /// Strict-mode parameters with `a = 1 + √2/2`, Newton tolerance `1e-12`
    /// and at most 50 iterations.
    pub fn new(epsilon: f64, tau: f64, theta: f64, theta_c: f64) -> Self {
        LogParams {
            epsilon,
            tau,
            theta,
            theta_c,
            a: A_STRICT_MIN,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            mode: SchemeMode::Strict,
        }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_mode(mut self, mode: SchemeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_newton(mut self, tol: f64, max_iter: usize) -> Self {
        self.newton_tol = tol;
        self.newton_max_iter = max_iter;
        self
    }

    /// Largest step admitted by `mode` for these temperatures and `a`.
    pub fn tau_bound(&self) -> f64 {
        let gap = self.theta_c - self.theta;
        match self.mode {
            SchemeMode::Strict => 1.0 / (3.0 * self.a * gap),
            SchemeMode::Solvable => 1.0 / ((3.0 * self.a - 1.0) * gap),
        }
    }
}

/// Validated logarithmic scheme with cached `u_*`.
#[derive(Clone, Debug)]
pub struct LogScheme {
    params: LogParams,
    u_star: f64,
    table: OnceLock<Arc<FbarTable>>,
}

/// Intermediate values of one Runge–Kutta step at a single point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageValues {
    pub v: f64,
    pub u1: f64,
    pub u2: f64,
    pub output: f64,
}

impl LogScheme {
    pub fn new(params: LogParams) -> Result<Self> {
        let p = &params;
        let bad = |m: String| Err(Error::InvalidScheme(m));
        if !(p.epsilon > 0.0 && p.epsilon.is_finite()) {
            return bad(format!("epsilon must be > 0, got {}", p.epsilon));
        }
        if !(p.tau > 0.0 && p.tau.is_finite()) {
            return bad(format!("tau must be > 0, got {}", p.tau));
        }
        check_temperatures(p.theta, p.theta_c)?;
        if !(p.newton_tol > 0.0) || p.newton_max_iter == 0 {
            return bad("Newton tolerance and iteration cap must be positive".into());
        }
        let slack = 1.0 + 1e-12;
        let a_min = match p.mode {
            SchemeMode::Strict => A_STRICT_MIN,
            SchemeMode::Solvable => 0.5,
        };
        if !(p.a * slack >= a_min) {
            return bad(format!("a = {} is below {a_min} ({:?} mode)", p.a, p.mode));
        }
        let bound = params.tau_bound();
        if p.tau > bound * slack {
            return bad(format!(
                "tau = {} exceeds {bound} required in {:?} mode",
                p.tau, p.mode
            ));
        }
        let u_star = find_ustar(p.theta, p.theta_c)?;
        Ok(LogScheme {
            params,
            u_star,
            table: OnceLock::new(),
        })
    }

    pub fn params(&self) -> &LogParams {
        &self.params
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.params.tau
    }

    pub fn theta(&self) -> f64 {
        self.params.theta
    }

    pub fn theta_c(&self) -> f64 {
        self.params.theta_c
    }

    pub fn a(&self) -> f64 {
        self.params.a
    }

    pub fn mode(&self) -> SchemeMode {
        self.params.mode
    }

    pub fn u_star(&self) -> f64 {
        self.u_star
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        LogScheme::new(LogParams { tau, ..self.params })
    }

    #[inline]
    fn g(&self, u: f64) -> f64 {
        g_unchecked(u, self.params.theta, self.params.theta_c)
    }

    #[inline]
    fn a_tau(&self) -> f64 {
        self.params.a * self.params.tau
    }

    /// `H(u) = u - aτ g(u)`.
    pub fn h_map(&self, u: f64) -> Result<f64> {
        check_open_unit(u)?;
        Ok(self.h_unchecked(u))
    }

    #[inline]
    fn h_unchecked(&self, u: f64) -> f64 {
        let at = self.a_tau();
        (1.0 - at * self.params.theta_c) * u + at * self.params.theta * artanh(u)
    }

    #[inline]
    fn h_prime(&self, u: f64) -> f64 {
        1.0 - self.a_tau() * g_prime(u, self.params.theta, self.params.theta_c)
    }

    /// Maps `|v| ≤ u_* + MAX_NORM_SLACK` onto `[-u_*, u_*]`.
    fn admit(&self, v: f64) -> Result<f64> {
        let bound = self.u_star;
        if v.abs() <= bound {
            Ok(v)
        } else if v.abs() <= bound + MAX_NORM_SLACK {
            Ok(bound.copysign(v))
        } else {
            Err(Error::MaxNormExceeded { value: v.abs(), bound })
        }
    }

    /// Solves `H(u) = target` for `u ∈ [lo, u_*]`, `0 ≤ lo`, Newton from `u_*`
    /// with bisection fallback on the bracket.
    fn solve_h(&self, target: f64, lo: f64, v: f64) -> Result<f64> {
        let tol = self.params.newton_tol;
        let residual = |u: f64| self.h_unchecked(u) - target;
        let mut u = self.u_star;
        let mut r = residual(u);
        let mut best = r.abs();
        let mut stalled = 0;
        let mut iterations = 0;
        while iterations < self.params.newton_max_iter {
            if r.abs() <= tol {
                return Ok(self.polish(u, r, &residual));
            }
            iterations += 1;
            let next = u - r / self.h_prime(u);
            if !(next.abs() <= DOMAIN_EDGE) {
                return self.bisect(target, lo, v);
            }
            u = next;
            r = residual(u);
            if r.abs() < best {
                best = r.abs();
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= STALL_LIMIT {
                    return self.bisect(target, lo, v);
                }
            }
        }
        Err(Error::NewtonFailure {
            v,
            iterations,
            residual: r.abs(),
        })
    }

    /// A few extra Newton steps once the tolerance is met, kept only while
    /// they reduce the residual.
    fn polish(&self, mut u: f64, mut r: f64, residual: &impl Fn(f64) -> f64) -> f64 {
        for _ in 0..3 {
            if r == 0.0 {
                break;
            }
            let next = u - r / self.h_prime(u);
            if !(next.abs() <= DOMAIN_EDGE) {
                break;
            }
            let rn = residual(next);
            if rn.abs() < r.abs() {
                u = next;
                r = rn;
            } else {
                break;
            }
        }
        u
    }

    fn bisect(&self, target: f64, lo: f64, v: f64) -> Result<f64> {
        let residual = |u: f64| self.h_unchecked(u) - target;
        let (mut lo, mut hi) = (lo, self.u_star);
        let (r_lo, r_hi) = (residual(lo), residual(hi));
        if r_lo > 0.0 || r_hi < 0.0 {
            return Err(Error::NewtonFailure {
                v,
                iterations: self.params.newton_max_iter,
                residual: r_lo.abs().min(r_hi.abs()),
            });
        }
        for _ in 0..BISECTION_CAP {
            let mid = 0.5 * (lo + hi);
            let r = residual(mid);
            if r.abs() <= self.params.newton_tol || mid == lo || mid == hi {
                return Ok(mid);
            }
            if r < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// First stage: `u₁ = v + aτ g(u₁)`.
    pub fn newton_stage1(&self, v: f64) -> Result<f64> {
        let v = self.admit(v)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        let w = v.abs();
        Ok(self.solve_h(w, w, v)?.copysign(v))
    }

    /// Second stage: `u₂ = v + (1 - 2a)τ g(u₁) + aτ g(u₂)`.
    pub fn newton_stage2(&self, v: f64, u1: f64) -> Result<f64> {
        let v = self.admit(v)?;
        check_open_unit(u1)?;
        if v == 0.0 && u1 == 0.0 {
            return Ok(0.0);
        }
        let s = if v < 0.0 { -1.0 } else { 1.0 };
        let (w, w1) = (s * v, s * u1);
        let target = w + (1.0 - 2.0 * self.params.a) * self.params.tau * self.g(w1);
        Ok(s * self.solve_h(target, 0.0, v)?)
    }

    /// Full Runge–Kutta step at one point, keeping the stage values.
    pub fn prrk_stages(&self, v: f64) -> Result<StageValues> {
        let v = self.admit(v)?;
        if v == 0.0 {
            return Ok(StageValues {
                v,
                u1: 0.0,
                u2: 0.0,
                output: 0.0,
            });
        }
        let s = v.signum();
        let w = v.abs();
        let u1 = self.solve_h(w, w, v)?;
        let target = w + (1.0 - 2.0 * self.params.a) * self.params.tau * self.g(u1);
        let u2 = self.solve_h(target, 0.0, v)?;
        let output = w + 0.5 * self.params.tau * (self.g(u1) + self.g(u2));
        Ok(StageValues {
            v: s * w,
            u1: s * u1,
            u2: s * u2,
            output: s * output,
        })
    }

    /// `S̃_N(τ) v = v + (τ/2) g(u₁) + (τ/2) g(u₂)`.
    pub fn prrk_flow(&self, v: f64) -> Result<f64> {
        Ok(self.prrk_stages(v)?.output)
    }

    /// Pointwise Runge–Kutta propagator over a field.
    pub fn nonlinear_flow(&self, u: &Field) -> Result<Field> {
        u.try_map(|v| self.prrk_flow(v))
    }

    /// `F̄'(u) = -(g(u₁(u)) + g(u₂(u))) / 2`.
    pub fn fbar_prime(&self, u: f64) -> Result<f64> {
        let st = self.prrk_stages(u)?;
        Ok(-0.5 * (self.g(st.u1) + self.g(st.u2)))
    }

    /// `F̄''(u)` from implicit differentiation of the stage equations.
    pub fn fbar_second(&self, u: f64) -> Result<f64> {
        let st = self.prrk_stages(u)?;
        Ok(self.fbar_second_from(&st))
    }

    fn fbar_second_from(&self, st: &StageValues) -> f64 {
        let (theta, theta_c) = (self.params.theta, self.params.theta_c);
        let (a, tau) = (self.params.a, self.params.tau);
        let g1 = g_prime(st.u1, theta, theta_c);
        let g2 = g_prime(st.u2, theta, theta_c);
        let d1 = 1.0 / (1.0 - a * tau * g1);
        let d2 = (1.0 + (1.0 - 2.0 * a) * tau * g1 * d1) / (1.0 - a * tau * g2);
        -0.5 * (g1 * d1 + g2 * d2)
    }

    /// Tabulated `F̄`, built on first use.
    pub fn fbar_table(&self) -> Result<&FbarTable> {
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        let built = Arc::new(FbarTable::build(self, FBAR_NODES)?);
        Ok(self.table.get_or_init(|| built))
    }
}

/// `g` for a scheme's temperatures, checked.
impl LogScheme {
    pub fn g_log(&self, u: f64) -> Result<f64> {
        g_log(u, self.params.theta, self.params.theta_c)
    }
}

const FBAR_NODES: usize = 2048;
const FBAR_PANEL_POINTS: usize = 32;

/// `F̄` on Chebyshev nodes over `[0, u_*]`, with first and second derivatives,
/// evaluated by quintic Hermite interpolation and extended evenly.
#[derive(Clone, Debug)]
pub struct FbarTable {
    nodes: Vec<f64>,
    value: Vec<f64>,
    slope: Vec<f64>,
    curvature: Vec<f64>,
    u_star: f64,
}

impl FbarTable {
    pub fn build(scheme: &LogScheme, nodes: usize) -> Result<Self> {
        assert!(nodes >= 2);
        let u_star = scheme.u_star();
        let m = (nodes - 1) as f64;
        let mut xs: Vec<f64> = (0..nodes)
            .map(|j| 0.5 * u_star * (1.0 - (std::f64::consts::PI * j as f64 / m).cos()))
            .collect();
        xs[0] = 0.0;
        xs[nodes - 1] = u_star;

        let gl = GaussLegendre::new(FBAR_PANEL_POINTS);
        let mut value = Vec::with_capacity(nodes);
        let mut slope = Vec::with_capacity(nodes);
        let mut curvature = Vec::with_capacity(nodes);
        let mut acc = 0.0;
        for (j, &x) in xs.iter().enumerate() {
            if j > 0 {
                acc += gl.integrate(xs[j - 1], x, |s| scheme.fbar_prime(s))?;
            }
            let st = scheme.prrk_stages(x)?;
            value.push(acc);
            slope.push(-0.5 * (scheme.g(st.u1) + scheme.g(st.u2)));
            curvature.push(scheme.fbar_second_from(&st));
        }
        Ok(FbarTable {
            nodes: xs,
            value,
            slope,
            curvature,
            u_star,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    pub fn u_star(&self) -> f64 {
        self.u_star
    }

    /// `F̄(u)` for `|u| ≤ u_* + MAX_NORM_SLACK`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        let x = u.abs();
        if x > self.u_star + MAX_NORM_SLACK || x.is_nan() {
            return Err(Error::MaxNormExceeded {
                value: x,
                bound: self.u_star,
            });
        }
        let x = x.min(self.u_star);
        let i = match self.nodes.partition_point(|&n| n <= x) {
            0 => 0,
            p if p >= self.nodes.len() => self.nodes.len() - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        Ok(quintic_hermite(
            t,
            h,
            [self.value[i], self.slope[i], self.curvature[i]],
            [self.value[i + 1], self.slope[i + 1], self.curvature[i + 1]],
        ))
    }
}

/// Quintic Hermite interpolant on `[0, 1]` (scaled by `h`) matching value,
/// first and second derivative at both ends.
fn quintic_hermite(t: f64, h: f64, left: [f64; 3], right: [f64; 3]) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
    h00 * left[0]
        + h * h10 * left[1]
        + h * h * h20 * left[2]
        + h01 * right[0]
        + h * h11 * right[1]
        + h * h * h21 * right[2]
}

/// `F̄(u)` from the scheme's table.
pub fn modified_potential_log(u: f64, scheme: &LogScheme) -> Result<f64> {
    scheme.fbar_table()?.eval(u)
}

/// `F̄(u)` by composite Gauss–Legendre quadrature of `F̄'` from `0`, with the
/// panel count doubled until two successive estimates agree to `1e-10`.
pub fn modified_potential_log_quadrature(u: f64, scheme: &LogScheme) -> Result<f64> {
    let u = scheme.admit(u)?;
    if u == 0.0 {
        return Ok(0.0);
    }
    let gl = GaussLegendre::new(16);
    let composite = |panels: usize| -> Result<f64> {
        let width = u / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let a = p as f64 * width;
            sum += gl.integrate(a, a + width, |s| scheme.fbar_prime(s))?;
        }
        Ok(sum)
    };
    let mut panels = 1;
    let mut prev = composite(panels)?;
    while panels < 4096 {
        panels *= 2;
        let next = composite(panels)?;
        if (next - prev).abs() <= 1e-10 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "F̄({u}) did not reach 1e-10 with {panels} panels"
    )))
}

/// Flory–Huggins density
/// `(θ/2)[(1+u) ln(1+u) + (1-u) ln(1-u)] - (θ_c/2) u²`, with `0 ln 0 = 0`.
pub fn standard_potential_log(u: f64, theta: f64, theta_c: f64) -> Result<f64> {
    if !(u.abs() <= 1.0) {
        return Err(Error::Domain {
            value: u,
            domain: "[-1, 1]",
        });
    }
    let xlogx = |x: f64, l: f64| if x == 0.0 { 0.0 } else { x * l };
    let entropy = xlogx(1.0 + u, u.ln_1p()) + xlogx(1.0 - u, (-u).ln_1p());
    Ok(0.5 * theta * entropy - 0.5 * theta_c * u * u)
}

/// `E(u)` with the Flory–Huggins potential.
pub fn standard_energy_log(u: &Field, epsilon: f64, theta: f64, theta_c: f64) -> Result<f64> {
    let mut potential = 0.0;
    for &v in u.values() {
        potential += standard_potential_log(v, theta, theta_c)?;
    }
    Ok(gradient_energy(u, epsilon)? + u.grid().cell_volume() * potential)
}

/// Modified energy `Ēⁿ`, evaluated from the step value `uⁿ`.
///
/// The quadratic part `(1/2τ)⟨(e^{-ε²τΔ} - 1)ũⁿ, ũⁿ⟩` equals
/// `(1/2τ)⟨(1 - e^{ε²τΔ})uⁿ, uⁿ⟩` because `ũⁿ = e^{ε²τΔ/2} uⁿ`; only the
/// latter, bounded form is computed.
pub fn modified_energy_log(u_n: &Field, scheme: &LogScheme) -> Result<f64> {
    let norm = u_n.max_abs();
    if norm > scheme.u_star() + MAX_NORM_SLACK {
        return Err(Error::MaxNormExceeded {
            value: norm,
            bound: scheme.u_star(),
        });
    }
    let (eps, tau) = (scheme.epsilon(), scheme.tau());
    let table = scheme.fbar_table()?;
    let tilde = apply_heat_propagator(u_n, 0.5 * eps * eps * tau)?;
    let mut potential = 0.0;
    for &z in tilde.values() {
        potential += table.eval(z)?;
    }
    Ok(splitting_quadratic(u_n, eps, tau)? + u_n.grid().cell_volume() * potential)
}
