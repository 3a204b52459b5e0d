//! Linearized optimistic FTRL on a splittable selfish-routing network.

use regret_dynamics::continuous::{certify_continuous_bound, certify_continuous_rvu, linearized_regret, run_continuous, true_regret, CongestionNetwork};

const NETWORK: &str = "\
# diamond with a shortcut; latency a x^2 + b x + c
edge s a 0 1 0
edge a t 0.2 0 0.5
edge s b 0.2 0 0.5
edge b t 0 1 0
edge a b 0 0.1 0
player s t 1
player s t 0.5
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = CongestionNetwork::parse(NETWORK)?;
    let bundle = net.lipschitz_constant();
    let eta = bundle.recommended_eta(net.players());
    println!("paths per player: {}, L = {:.4}, eta = {:.5}", net.paths(0).len(), bundle.l(), eta);
    let trace = run_continuous(&net, eta, 2000)?;
    for i in 0..net.players() {
        println!(
            "player {i}: linearized regret {:.4}, true regret {:.4}, final split {:?}",
            linearized_regret(&net, &trace, i),
            true_regret(&net, &trace, i),
            trace.flows.last().unwrap()[i].iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>()
        );
        let rvu = certify_continuous_rvu(&net, &trace, i)?;
        println!("    rvu: regret {:.4} <= {:.4}: {}", rvu.regret, rvu.rhs, rvu.passed);
    }
    println!("{}", certify_continuous_bound(&net, &trace)?);
    Ok(())
}
