//! The doubling wrapper against a best-responding opponent and in self-play.

use regret_dynamics::dynamics::{regret, report, ReportContext, Simulation};
use regret_dynamics::library::random_game;
use regret_dynamics::robust::{recommended_eta_star, EtaStarMode};
use regret_dynamics::{FeedbackMode, LearnerSpec, PlayerSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = random_game(&[4, 4], 5)?;
    let rounds = 4096;
    let eta_star = recommended_eta_star(EtaStarMode::Individual, 2, 1.0, 0.25, rounds)?;
    let wrapped = PlayerSpec::Robust {
        inner: LearnerSpec::optimistic_hedge(1.0),
        eta_star,
    };
    let scenarios = [
        ("self-play", vec![wrapped.clone(), wrapped.clone()]),
        ("vs best response", vec![wrapped.clone(), PlayerSpec::BestResponse]),
        ("plain OH vs best response", vec![PlayerSpec::Learner(LearnerSpec::optimistic_hedge(0.5)), PlayerSpec::BestResponse]),
    ];
    println!("eta_star = {eta_star:.4}, T = {rounds}");
    for (label, specs) in scenarios {
        let mut sim = Simulation::from_specs(&game, &specs, FeedbackMode::Utility)?;
        sim.run(rounds)?;
        let trace = sim.into_trace();
        let r = report(&trace, &ReportContext::default())?;
        println!("{label}: regret of player 0 = {:.4}", regret(&trace, 0));
        for c in r.certificates.iter().filter(|c| c.name.starts_with("robust") && c.name.ends_with("[0]")) {
            println!("    {c}");
        }
    }
    Ok(())
}
