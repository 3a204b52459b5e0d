//! First-order Hedge in a cost game and the resulting welfare certificate.

use regret_dynamics::cost::{best_cost_smoothness, certify_first_order_welfare, first_order_samples, fit_first_order_constants, FirstOrderHedge};
use regret_dynamics::dynamics::Simulation;
use regret_dynamics::library::random_game;
use regret_dynamics::{FeedbackMode, OnlineLearner, PlayerSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 5;
    for rounds in [1_000usize, 10_000, 100_000] {
        let mut h = FirstOrderHedge::doubling(d)?;
        let (mut paid, mut best) = (0.0, 0.0);
        for _ in 0..rounds {
            let w = h.play()?;
            let c: Vec<f64> = (0..d).map(|k| if k == 0 { 0.0 } else { 1.0 }).collect();
            paid += w.dot(&c);
            best += c[0];
            h.observe_cost(&c)?;
        }
        println!("one good arm, T={rounds:>6}: regret {:.4} after {} epochs", paid - best, h.epochs());
    }

    let game = random_game(&[3, 3], 17)?;
    let smooth = best_cost_smoothness(&game, 0.5, 1 << 20)?;
    println!("cost smoothness: lambda={:.4} mu={} verified={}", smooth.lambda, smooth.mu, smooth.verified);
    let mut sim = Simulation::from_specs(&game, &[PlayerSpec::FirstOrderHedge, PlayerSpec::FirstOrderHedge], FeedbackMode::Cost)?;
    sim.run(2000)?;
    let trace = sim.into_trace();
    let constants = fit_first_order_constants(&first_order_samples(&trace));
    println!("fitted constants: {constants:?}");
    println!("{}", certify_first_order_welfare(&trace, &smooth, constants)?);
    Ok(())
}
