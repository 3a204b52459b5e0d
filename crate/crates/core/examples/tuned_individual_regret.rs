//! With eta = (n-1)^(-1/2) T^(-1/4) each player's regret grows like T^(1/4).

use regret_dynamics::dynamics::{regret, self_play};
use regret_dynamics::library::random_game;
use regret_dynamics::{LearnerSpec, PlayerSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, d) = (4usize, 5usize);
    let game = random_game(&vec![d; n], 11)?;
    println!("{:>7} {:>10} {:>12} {:>10}", "T", "eta", "max r_i", "bound");
    for rounds in [256usize, 1024, 4096, 16384] {
        let k = (n - 1) as f64;
        let eta = k.powf(-0.5) * (rounds as f64).powf(-0.25);
        let bound = ((d as f64).ln() + 4.0) * k.sqrt() * (rounds as f64).powf(0.25);
        let trace = self_play(&game, &PlayerSpec::Learner(LearnerSpec::optimistic_hedge(eta)), rounds)?;
        let worst = (0..n).map(|i| regret(&trace, i)).fold(f64::MIN, f64::max);
        println!("{rounds:>7} {eta:>10.5} {worst:>12.4} {bound:>10.4}");
    }
    Ok(())
}
