//! Desk-scale temporal convergence table for the polynomial potential.

use std::f64::consts::PI;

use ac_strang::initial::ic_sine;
use ac_strang::verify::convergence_study;
use ac_strang::{make_grid, PolyScheme, Scheme};

fn main() -> ac_strang::Result<()> {
    let grid = make_grid(64, 2.0 * PI, 2)?;
    let u0 = ic_sine(&grid)?;
    let scheme: Scheme = PolyScheme::new(0.1, 0.1)?.into();
    let taus = [0.1, 0.05, 0.025, 0.0125, 0.00625];
    let report = convergence_study(&u0, &scheme, &taus, 2.5e-4, 2.0, None)?;
    print!("{}", report.to_table());
    Ok(())
}
