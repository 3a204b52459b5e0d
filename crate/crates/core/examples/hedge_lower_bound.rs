//! Vanilla Hedge against a best responder: no single step size keeps regret
//! small on both lower-bound games.

use regret_dynamics::library::lower_bound_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rounds = 1000;
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "eta", "r on A", "r' on A'", "max", "sqrt floor");
    for eta in [1e-4, 1e-3, 1e-2, 0.03, 0.1, 0.3, 1.0, 3.0] {
        let r = lower_bound_experiment(eta, rounds)?;
        println!(
            "{eta:>10} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
            r.r_game_a,
            r.r_game_a_prime,
            r.max_regret(),
            r.sqrt_floor
        );
    }
    Ok(())
}
