//! Double-well potential `F(u) = (u² - 1)² / 4`: the exact flow of
//! `∂_t u = u - u³`, its modified potential and the two energies.

use crate::error::{Error, Result};
use crate::spectral::{quadratic_form, Field, ModeTable};

/// Parameters of the polynomial Strang scheme. Any `tau > 0` is admissible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyScheme {
    epsilon: f64,
    tau: f64,
}

impl PolyScheme {
    pub fn new(epsilon: f64, tau: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidScheme(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidScheme(format!("tau must be > 0, got {tau}")));
        }
        Ok(PolyScheme { epsilon, tau })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        PolyScheme::new(self.epsilon, tau)
    }

    /// Pointwise exact nonlinear propagator over one step.
    pub fn nonlinear_flow(&self, u: &Field) -> Result<Field> {
        u.map(|a| poly_nonlinear_flow(a, self.tau))
    }
}

/// Exact solution of `∂_t u = u - u³`, `u(0) = a`, at time `tau`:
/// `e^τ a / sqrt(1 + (e^{2τ} - 1) a²)`.
pub fn poly_nonlinear_flow(a: f64, tau: f64) -> f64 {
    // divided through by e^τ so that large tau cannot overflow
    let decay = (-2.0 * tau).exp();
    let growth = -(-2.0 * tau).exp_m1();
    a / (decay + growth * a * a).sqrt()
}

/// `e^{2τ} - 1`, `e^τ / (τ (e^{2τ} - 1))` and `sqrt(1 + (e^{2τ} - 1) z²)`.
fn flow_terms(z: f64, tau: f64) -> (f64, f64) {
    let e2 = (2.0 * tau).exp_m1();
    let root = (1.0 + e2 * z * z).sqrt();
    (e2, root)
}

/// Modified potential
/// `F̃(z) = 1/4 + z²/(2τ) - e^τ/(τ(e^{2τ}-1)) (sqrt(1 + (e^{2τ}-1) z²) - 1)`.
pub fn modified_potential_poly(z: f64, tau: f64) -> f64 {
    let (e2, root) = flow_terms(z, tau);
    let z2 = z * z;
    // sqrt(1 + E z²) - 1 = E z² / (root + 1), and
    // 1/2 - e^τ/(root + 1) = ((root - 1) - 2(e^τ - 1)) / (2 (root + 1))
    let root_m1 = e2 * z2 / (root + 1.0);
    0.25 + z2 * (root_m1 - 2.0 * tau.exp_m1()) / (2.0 * tau * (root + 1.0))
}

/// `F̃'(z) = (z - S_N(τ) z) / τ`.
pub fn modified_potential_poly_deriv(z: f64, tau: f64) -> f64 {
    (z - poly_nonlinear_flow(z, tau)) / tau
}

/// `F̃''(z) = 1/τ - e^τ / (τ (1 + (e^{2τ}-1) z²)^{3/2})`.
pub fn modified_potential_poly_second_deriv(z: f64, tau: f64) -> f64 {
    let (_, root) = flow_terms(z, tau);
    (1.0 - tau.exp() / (root * root * root)) / tau
}

/// Double-well density `(u² - 1)² / 4`.
pub fn double_well(u: f64) -> f64 {
    let d = u * u - 1.0;
    0.25 * d * d
}

/// `(ε²/2) ⟨-Δ_h u, u⟩`, computed with the discrete symbol.
pub fn gradient_energy(u: &Field, epsilon: f64) -> Result<f64> {
    let neg_w = ModeTable::from_symbol(u.grid(), |w| -w);
    Ok(0.5 * epsilon * epsilon * quadratic_form(u, &neg_w)?)
}

/// `(1/2τ) ⟨(1 - e^{ε²τΔ_h}) u, u⟩`, shared by both modified energies.
pub(crate) fn splitting_quadratic(u: &Field, epsilon: f64, tau: f64) -> Result<f64> {
    let c = epsilon * epsilon * tau;
    let table = ModeTable::from_symbol(u.grid(), |w| -(c * w).exp_m1() / (2.0 * tau));
    quadratic_form(u, &table)
}

/// `E(u) = (ε²/2)|∇_h u|² + Σ h^d (u² - 1)²/4`.
pub fn standard_energy(u: &Field, epsilon: f64) -> Result<f64> {
    let potential: f64 = u.values().iter().map(|&v| double_well(v)).sum();
    Ok(gradient_energy(u, epsilon)? + u.grid().cell_volume() * potential)
}

/// Modified energy `Ẽⁿ` evaluated at the step value `uⁿ`.
pub fn modified_energy_poly(u_n: &Field, scheme: &PolyScheme) -> Result<f64> {
    let (eps, tau) = (scheme.epsilon, scheme.tau);
    let tilde = crate::spectral::apply_heat_propagator(u_n, 0.5 * eps * eps * tau)?;
    let potential: f64 = tilde
        .values()
        .iter()
        .map(|&z| modified_potential_poly(z, tau))
        .sum();
    Ok(splitting_quadratic(u_n, eps, tau)? + u_n.grid().cell_volume() * potential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inner, make_grid};
    use std::f64::consts::{LN_2, PI};

    /// Classical RK4 on `u' = u - u³`, independent of the closed form.
    fn rk4(a: f64, t: f64, steps: usize) -> f64 {
        let f = |u: f64| u - u * u * u;
        let dt = t / steps as f64;
        let mut u = a;
        for _ in 0..steps {
            let k1 = f(u);
            let k2 = f(u + 0.5 * dt * k1);
            let k3 = f(u + 0.5 * dt * k2);
            let k4 = f(u + dt * k3);
            u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        u
    }

    #[test]
    fn flow_fixed_points_and_value() {
        assert_eq!(poly_nonlinear_flow(0.0, 0.7), 0.0);
        for tau in [0.01, 1.0, 10.0, 100.0] {
            assert!((poly_nonlinear_flow(1.0, tau) - 1.0).abs() < 1e-15);
            assert!((poly_nonlinear_flow(-1.0, tau) + 1.0).abs() < 1e-15);
        }
        let v = poly_nonlinear_flow(0.6, LN_2);
        assert!((v - 1.2 / 2.08_f64.sqrt()).abs() < 1e-15);
        assert!((v - 0.832_050_294_337_843_7).abs() < 1e-14);
        assert!((v - rk4(0.6, LN_2, 4000)).abs() < 1e-12);
    }

    #[test]
    fn flow_matches_rk4_oracle() {
        for &tau in &[0.01, 0.3, 1.0] {
            for k in -15..=15 {
                let a = k as f64 * 0.1;
                let exact = poly_nonlinear_flow(a, tau);
                assert!((exact - rk4(a, tau, 4000)).abs() < 1e-9, "a={a} tau={tau}");
            }
        }
    }

    #[test]
    fn modified_potential_values() {
        assert_eq!(modified_potential_poly(0.0, 0.5), 0.25);
        let e = std::f64::consts::E;
        let h1 = 0.25 - 0.5 * (e - 1.0) / (e + 1.0);
        assert!((modified_potential_poly(1.0, 1.0) - h1).abs() < 1e-15);
        assert!((h1 - 0.018_941).abs() < 1e-6);
        // O(τ) distance to the double well
        let small = modified_potential_poly(0.5, 1e-3);
        assert!((small - 0.140_625).abs() < 1e-3);
        assert!((small - 0.140_625).abs() > 0.0);
    }

    #[test]
    fn derivative_zero_at_well() {
        assert_eq!(modified_potential_poly_deriv(0.0, 0.3), 0.0);
        assert!(modified_potential_poly_deriv(1.0, LN_2).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let d = 1e-5;
        for &tau in &[0.05, 0.5, 2.0] {
            for k in -8..=8 {
                let z = 0.23 * k as f64;
                let fd = (modified_potential_poly(z + d, tau) - modified_potential_poly(z - d, tau))
                    / (2.0 * d);
                assert!((fd - modified_potential_poly_deriv(z, tau)).abs() < 1e-8);
                let fd2 = (modified_potential_poly_deriv(z + d, tau)
                    - modified_potential_poly_deriv(z - d, tau))
                    / (2.0 * d);
                assert!((fd2 - modified_potential_poly_second_deriv(z, tau)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn standard_energy_constants_and_sine() {
        let g = make_grid(32, 2.0 * PI, 2).unwrap();
        let e0 = standard_energy(&Field::constant(g.clone(), 0.0), 0.1).unwrap();
        assert!((e0 - PI * PI).abs() < 1e-12);
        assert!(standard_energy(&Field::constant(g, 1.0), 0.1).unwrap().abs() < 1e-15);

        // brute force: difference quotients on the real side
        let n = 128;
        let g = make_grid(n, 2.0 * PI, 1).unwrap();
        let h = g.spacing();
        let eps = 0.3;
        let u = Field::from_fn(g.clone(), |x, _| x.sin()).unwrap();
        let v = u.values();
        let grad: f64 = (0..n)
            .map(|j| {
                let d = (v[(j + 1) % n] - v[j]) / h;
                d * d
            })
            .sum::<f64>()
            * h;
        let pot: f64 = v.iter().map(|&x| double_well(x)).sum::<f64>() * h;
        let brute = 0.5 * eps * eps * grad + pot;
        let e = standard_energy(&u, eps).unwrap();
        assert!((e - brute).abs() < 1e-12 * brute);
        let w1 = g.symbol()[1];
        let grad_closed = 0.5 * eps * eps * (-w1) * inner(&u, &u).unwrap();
        assert!((gradient_energy(&u, eps).unwrap() - grad_closed).abs() < 1e-12);
    }

    #[test]
    fn modified_energy_constants() {
        let g = make_grid(16, 2.0 * PI, 2).unwrap();
        let area = 4.0 * PI * PI;
        let s = PolyScheme::new(0.1, 0.2).unwrap();
        let e0 = modified_energy_poly(&Field::constant(g.clone(), 0.0), &s).unwrap();
        assert!((e0 - area / 4.0).abs() < 1e-12);
        let e1 = modified_energy_poly(&Field::constant(g, 1.0), &s).unwrap();
        assert!((e1 - area * modified_potential_poly(1.0, 0.2)).abs() < 1e-12);
        assert!(e1 >= 0.0);
    }

    #[test]
    fn scheme_validation() {
        assert!(PolyScheme::new(0.0, 0.1).is_err());
        assert!(PolyScheme::new(0.1, 0.0).is_err());
        assert!(PolyScheme::new(0.1, f64::NAN).is_err());
        assert!(PolyScheme::new(0.1, 1e3).is_ok());
    }
}
