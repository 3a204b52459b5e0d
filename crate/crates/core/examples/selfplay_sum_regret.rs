//! Optimistic FTRL in self-play keeps the sum of regrets bounded by a constant.

use regret_dynamics::dynamics::{regret, self_play};
use regret_dynamics::library::random_game;
use regret_dynamics::{LearnerSpec, PlayerSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, d) = (3usize, 4usize);
    let game = random_game(&vec![d; n], 2024)?;
    let eta = 1.0 / (2.0 * (n - 1) as f64);
    let bound = n as f64 * (d as f64).ln() / eta;
    println!("n={n} d={d} eta={eta} bound={bound:.4}");
    for rounds in [100, 1_000, 10_000, 50_000] {
        let trace = self_play(&game, &PlayerSpec::Learner(LearnerSpec::optimistic_hedge(eta)), rounds)?;
        let sum: f64 = (0..n).map(|i| regret(&trace, i)).sum();
        let hedge = self_play(&game, &PlayerSpec::Learner(LearnerSpec::hedge(eta)), rounds)?;
        let hedge_sum: f64 = (0..n).map(|i| regret(&hedge, i)).sum();
        println!("T={rounds:>6}  optimistic {sum:>9.4}  hedge {hedge_sum:>9.4}");
    }
    Ok(())
}
