//! Flory-Huggins Allen-Cahn from the disk initial state; prints the energy
//! log and checks that max |u| never leaves [0, u_*].

use std::f64::consts::PI;

use ac_strang::initial::ic_disk;
use ac_strang::stepper::run;
use ac_strang::{make_grid, LogParams, LogScheme};

fn main() -> ac_strang::Result<()> {
    let grid = make_grid(128, 2.0 * PI, 2)?;
    let scheme = LogScheme::new(LogParams::new(0.01, 0.01, 0.25, 1.0))?;
    let u_star = scheme.u_star();
    let state = run(ic_disk(&grid)?, scheme.into(), 5.0, 50)?;
    println!("u_* = {u_star:.12}");
    println!("{:>6} {:>10} {:>18} {:>18} {:>14}", "step", "time", "energy", "modified", "max |u|");
    for r in &state.records {
        println!(
            "{:>6} {:>10.3} {:>18.10e} {:>18.10e} {:>14.10}",
            r.step, r.time, r.standard_energy, r.modified_energy, r.max_abs
        );
    }
    let worst = state.records.iter().map(|r| r.max_abs).fold(0.0, f64::max);
    println!("largest max |u| = {worst:.15} (bound {u_star:.15})");
    Ok(())
}
