//! Hedge and Optimistic Hedge bidding in a simultaneous second-price auction.
//!
//! Writes traces, reports and figures under `$REGRET_DYNAMICS_OUT` (default `out/`).

use std::path::Path;

use regret_dynamics::dynamics::regret_series;
use regret_dynamics::experiment::{bid_trajectory, load_config, mean_abs_change, output_root, run_experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/auction_fig1.cfg");
    let spec = load_config(&cfg)?;
    let outcome = run_experiment(&spec, &output_root())?;

    println!("{:<12} {:>12} {:>12} {:>14}", "arm", "sum regret", "max prefix", "bid movement");
    for arm in &outcome.arms {
        let n = arm.trace.players();
        let series: Vec<Vec<f64>> = (0..n).map(|i| regret_series(&arm.trace, i)).collect();
        let peak = (0..arm.trace.rounds())
            .map(|t| series.iter().map(|s| s[t]).sum::<f64>())
            .fold(f64::MIN, f64::max);
        let bids: Vec<f64> = bid_trajectory(&arm.trace, 0, 0)?.iter().map(|p| p.conditional_bid).collect();
        println!("{:<12} {:>12.4} {:>12.4} {:>14.6}", arm.name, arm.report.sum_regret, peak, mean_abs_change(&bids));
    }
    println!("sum-of-regrets bound n ln(80) / eta = {:.2}", 4.0 * 80f64.ln() / 0.1);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
