use std::path::PathBuf;
use std::process::ExitCode;

use ac_strang::cli::{self, exit_code};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ac-strang", version, about = "Strang splitting for the Allen-Cahn equation")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML config.
    Run { config: PathBuf },
    /// Run a temporal convergence study described by a TOML config.
    Converge { config: PathBuf },
    /// Print u_* for the given temperatures and F̄ table diagnostics.
    Ustar {
        theta: f64,
        theta_c: f64,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let result = match args.command {
        Command::Run { config } => cli::cmd_run(&config).map(|o| {
            let last = o.state.records.last();
            println!(
                "{} steps to t = {}; outputs in {}",
                o.state.step,
                o.state.time(),
                o.output_dir.display()
            );
            if let Some(r) = last {
                println!(
                    "final: E = {:.10e}, modified E = {:.10e}, max|u| = {:.12}",
                    r.standard_energy, r.modified_energy, r.max_abs
                );
            }
        }),
        Command::Converge { config } => cli::cmd_converge(&config).map(|r| print!("{}", r.to_table())),
        Command::Ustar {
            theta,
            theta_c,
            tau,
            a,
        } => cli::cmd_ustar(theta, theta_c, tau, a).map(|s| print!("{s}")),
    };
    match result {
        Ok(()) => ExitCode::from(cli::EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
