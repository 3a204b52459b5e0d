//! Runs any experiment config: `cargo run --example run_config -- path/to.cfg`.

use std::path::PathBuf;

use regret_dynamics::experiment::{load_config, output_root, run_experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/matching_pennies.cfg"));
    let spec = match load_config(&path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let outcome = run_experiment(&spec, &output_root())?;
    if let Some(s) = &outcome.smoothness {
        println!("smoothness: lambda={:.4} mu={} verified={}", s.lambda, s.mu, s.verified);
    }
    for arm in &outcome.arms {
        println!("[{}] T={} sum regret {:.4}, CCE gap {:.5}", arm.name, arm.report.rounds, arm.report.sum_regret, arm.report.cce_gap);
        for c in &arm.report.certificates {
            println!("    {c}");
        }
    }
    Ok(())
}
