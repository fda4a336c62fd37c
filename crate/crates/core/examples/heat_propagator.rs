//! Applies the spectral heat propagator to a random field and prints the
//! invariants it preserves.

use std::f64::consts::PI;

use ac_strang::spectral::{apply_heat_propagator, inner};
use ac_strang::{make_grid, Field};

fn main() -> ac_strang::Result<()> {
    let grid = make_grid(64, 2.0 * PI, 2)?;
    let u = Field::from_fn(grid.clone(), |x, y| 0.3 + (3.0 * x).sin() * y.cos() + 0.2 * (x + 5.0 * y).cos())?;
    println!("{:>8} {:>14} {:>14} {:>14}", "eps^2 t", "mean", "max |u|", "h^2 sum u^2");
    for coeff in [0.0, 1e-3, 1e-2, 1e-1, 1.0] {
        let v = apply_heat_propagator(&u, coeff)?;
        println!(
            "{coeff:>8.0e} {:>14.10} {:>14.10} {:>14.10}",
            v.mean(),
            v.max_abs(),
            inner(&v, &v)?
        );
    }
    let split = apply_heat_propagator(&apply_heat_propagator(&u, 0.03)?, 0.07)?;
    let once = apply_heat_propagator(&u, 0.1)?;
    println!("semigroup defect: {:e}", split.sub(&once)?.max_abs());
    Ok(())
}
