//! Checks the regret-by-variation inequality for every predictor on a
//! slowly drifting utility stream and on an alternating one.

use regret_dynamics::learner::{certify_rvu_best_vertex, make_learner};
use regret_dynamics::{LearnerSpec, Predictor, Regularizer, UtilityVector};

type Stream = fn(usize) -> Vec<f64>;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 3;
    let specs = [
        LearnerSpec::omd(Regularizer::NegativeEntropy, 0.1, Predictor::LastUtility),
        LearnerSpec::optimistic_hedge(0.1),
        LearnerSpec::oftrl(Regularizer::NegativeEntropy, 0.1, Predictor::WindowAverage(3)),
        LearnerSpec::oftrl(Regularizer::NegativeEntropy, 0.1, Predictor::GeometricDiscount(0.5)),
        LearnerSpec::oftrl(Regularizer::SquaredEuclidean, 0.1, Predictor::LastUtility),
    ];
    let streams: [(&str, Stream); 2] = [
        ("drifting", |t| (0..3).map(|k| (0.5 + 0.5 * ((t as f64) / 200.0 + k as f64).sin()).clamp(0.0, 1.0)).collect()),
        ("alternating", |t| if t % 2 == 0 { vec![1.0, 0.0, 0.0] } else { vec![0.0, 1.0, 0.0] }),
    ];
    for (name, stream) in streams {
        println!("{name} stream");
        for spec in &specs {
            let mut l = make_learner(spec, d)?;
            let (mut us, mut ws) = (Vec::new(), Vec::new());
            for t in 0..1000 {
                ws.push(l.play()?.into_vec());
                let u = stream(t);
                l.observe(&UtilityVector::new(u.clone())?)?;
                us.push(u);
            }
            let params = spec.rvu_params(d).expect("parametric");
            let c = certify_rvu_best_vertex(&us, &ws, &params)?;
            // the variation fields already carry their beta and gamma weights
            println!(
                "  {:<28} regret {:>8.4} <= {:>8.4} + {:>8.4} - {:>8.4} = {:>8.4}",
                spec.label(),
                c.regret,
                c.alpha,
                c.utility_variation,
                c.strategy_variation,
                c.rhs
            );
        }
    }
    Ok(())
}
