//! Brute-force smoothness certificates and the welfare guarantee of no-regret play.

use regret_dynamics::dynamics::{report, ReportContext, Simulation};
use regret_dynamics::library::{best_smoothness, make_auction, random_game, AuctionSpec};
use regret_dynamics::{FeedbackMode, LearnerSpec, PlayerSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let auction = make_auction(AuctionSpec::uniform(2, 1, 20.0, 20))?;
    let lambda = 1.0 - (-1f64).exp();
    for s_star in [[0usize, 0], [15, 11]] {
        let c = auction.verify_smoothness(lambda, 0.0, &s_star, 1 << 20)?;
        println!("auction, s* = {s_star:?}: verified={} slack={:.4} worst={:?}", c.verified, c.slack, c.worst_profile);
    }
    let smooth = auction.verify_smoothness(lambda, 0.0, &[15, 11], 1 << 20)?;

    let game = random_game(&[3, 3, 3], 8)?;
    let tight = best_smoothness(&game, 1.0, 1 << 20)?;
    println!("random 3x3x3 game: tightest lambda at mu=1 is {:.4} (s* = {:?})", tight.lambda, tight.s_star);

    for (g, cert) in [(&auction, smooth), (&game, tight)] {
        let specs = vec![PlayerSpec::Learner(LearnerSpec::optimistic_hedge(0.1)); g.players()];
        let mut sim = Simulation::from_specs(g, &specs, FeedbackMode::Utility)?;
        sim.run(2000)?;
        let r = report(&sim.into_trace(), &ReportContext { smoothness: Some(cert) })?;
        println!("{}: average welfare {:.4}", g.label(), r.average_welfare);
        if let Some(c) = r.certificate("welfare-poa") {
            println!("    {c}");
        }
    }
    Ok(())
}
