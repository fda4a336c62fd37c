//! The root u_* and the tabulated modified potential F̄ for a few step sizes.

use ac_strang::cli::cmd_ustar;
use ac_strang::log_flow::{modified_potential_log, standard_potential_log};
use ac_strang::{LogParams, LogScheme};

fn main() -> ac_strang::Result<()> {
    print!("{}", cmd_ustar(0.25, 1.0, None, None)?);
    println!();
    println!("{:>8} {:>16} {:>16} {:>16} {:>16}", "u", "F_log", "F̄ tau=0.01", "F̄ tau=0.1", "F̄ tau=0.25");
    let schemes: Vec<LogScheme> = [0.01, 0.1, 0.25]
        .iter()
        .map(|&t| LogScheme::new(LogParams::new(0.01, t, 0.25, 1.0)))
        .collect::<Result<_, _>>()?;
    let us = schemes[0].u_star();
    for k in 0..=10 {
        let u = us * k as f64 / 10.0;
        print!("{u:>8.5} {:>16.10}", standard_potential_log(u, 0.25, 1.0)?);
        for s in &schemes {
            print!(" {:>16.10}", modified_potential_log(u, s)?);
        }
        println!();
    }
    Ok(())
}
