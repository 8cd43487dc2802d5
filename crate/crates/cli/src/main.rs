use std::process::ExitCode;

use cahn_hilliard_cli::{parse_config, run_experiment, ConfigError, Outcome};

fn main() -> ExitCode {
    let config = match parse_config(std::env::args_os().skip(1)) {
        Ok(c) => c,
        Err(ConfigError::Usage(msg)) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&config) {
        Ok(Outcome::Simulation(s)) => {
            println!(
                "{} steps, avg MINRES its {:.1}, max {}, avg Newton its {:.2}",
                s.steps, s.avg_minres_per_solve, s.max_minres_per_solve, s.avg_newton_per_step
            );
            ExitCode::SUCCESS
        }
        Ok(Outcome::Spectrum(reports)) => {
            println!("{} spectral reports, all within bounds", reports.len());
            ExitCode::SUCCESS
        }
        Ok(Outcome::Convergence(rows)) => {
            for r in rows {
                let order = r.h1_order.map_or("-".to_string(), |o| format!("{o:.2}"));
                println!("h = 1/{}: H1 error {:.3e}, order {order}", 1usize << r.level, r.h1_error);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
