//! Local order of the two-stage Runge-Kutta solver for the logarithmic
//! reaction ODE, for the Crouzeix coefficient and for a = 1 + √2/2.

use ac_strang::log_flow::{crouzeix_a, A_STRICT_MIN};
use ac_strang::verify::{ode_flow_oracle, one_step_order, OdeLaw};
use ac_strang::{LogParams, LogScheme, SchemeMode};

fn main() -> ac_strang::Result<()> {
    let (theta, theta_c) = (0.25, 1.0);
    let law = OdeLaw::Logarithmic { theta, theta_c };
    let taus: Vec<f64> = (0..5).map(|i| 0.1 / 2f64.powi(i)).collect();
    let samples = [0.1, 0.3, 0.5, 0.7];
    for (name, a, mode) in [
        ("crouzeix", crouzeix_a(), SchemeMode::Solvable),
        ("1 + sqrt(2)/2", A_STRICT_MIN, SchemeMode::Strict),
    ] {
        let base = LogScheme::new(
            LogParams::new(1.0, taus[0], theta, theta_c)
                .with_a(a)
                .with_mode(mode)
                .with_newton(1e-15, 60),
        )?;
        let fit = one_step_order(
            |v, tau| base.with_tau(tau)?.prrk_flow(v),
            |v, tau| ode_flow_oracle(law, v, tau, 64),
            &taus,
            &samples,
        )?;
        println!("a = {a:.6} ({name}): slope {:.3}", fit.slope);
        for (t, e) in fit.taus.iter().zip(&fit.errors) {
            println!("    tau = {t:<10} error = {e:.3e}");
        }
    }
    Ok(())
}
