use proptest::prelude::*;

use regret_dynamics::continuous::{CongestionNetwork, Latency};
use regret_dynamics::cost::FirstOrderHedge;
use regret_dynamics::dynamics::{regret, Simulation, Trace};
use regret_dynamics::experiment::parse_config;
use regret_dynamics::learner::{certify_rvu_best_vertex, make_learner};
use regret_dynamics::library::{lower_bound_experiment, make_auction, random_game, AuctionSpec};
use regret_dynamics::{FeedbackMode, LearnerSpec, MixedProfile, MixedStrategy, OnlineLearner, PlayerSpec, Predictor, Regularizer, UtilityVector};

fn predictor() -> impl Strategy<Value = Predictor> {
    prop_oneof![
        Just(Predictor::Zero),
        Just(Predictor::LastUtility),
        (1usize..6).prop_map(Predictor::WindowAverage),
        (0.05f64..0.95).prop_map(Predictor::GeometricDiscount),
    ]
}

fn learner() -> impl Strategy<Value = LearnerSpec> {
    (
        prop_oneof![Just(Regularizer::NegativeEntropy), Just(Regularizer::SquaredEuclidean)],
        0.01f64..5.0,
        predictor(),
        any::<bool>(),
    )
        .prop_map(|(r, eta, p, omd)| if omd { LearnerSpec::omd(r, eta, p) } else { LearnerSpec::oftrl(r, eta, p) })
}

fn stream(d: usize, rounds: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..=1.0, d), rounds)
}

fn simplex(d: usize) -> impl Strategy<Value = MixedStrategy> {
    prop::collection::vec(0.001f64..1.0, d).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        MixedStrategy::new(raw.into_iter().map(|x| x / s).collect()).unwrap()
    })
}

fn run(spec: &LearnerSpec, us: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut l = make_learner(spec, us[0].len()).unwrap();
    us.iter()
        .map(|u| {
            let w = l.play().unwrap().into_vec();
            l.observe(&UtilityVector::new(u.clone()).unwrap()).unwrap();
            w
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plays_stay_on_the_simplex(spec in learner(), (d, us) in (1usize..7).prop_flat_map(|d| (Just(d), stream(d, 40)))) {
        for w in run(&spec, &us) {
            prop_assert_eq!(w.len(), d);
            prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rvu_holds_for_parametric_learners(spec in learner(), us in stream(3, 60)) {
        let ws = run(&spec, &us);
        if let Some(params) = spec.rvu_params(3) {
            let cert = certify_rvu_best_vertex(&us, &ws, &params).unwrap();
            prop_assert!(cert.passed, "{:?}", cert);
        }
    }

    #[test]
    fn cost_hedge_matches_utility_hedge(eta in 0.01f64..3.0, cs in stream(4, 50)) {
        let mut by_cost = FirstOrderHedge::fixed(4, eta).unwrap();
        let mut by_utility = make_learner(&LearnerSpec::hedge(eta), 4).unwrap();
        for c in &cs {
            let a = by_cost.play().unwrap().into_vec();
            let b = by_utility.play().unwrap().into_vec();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            by_cost.observe_cost(c).unwrap();
            by_utility.observe(&UtilityVector::new(c.iter().map(|x| 1.0 - x).collect()).unwrap()).unwrap();
        }
    }

    #[test]
    fn auction_oracle_matches_dense(
        n in 1usize..=3, m in 1usize..=2, bids in 1usize..=3, value in 0.5f64..10.0, seed in any::<u64>(), subset in any::<bool>(),
    ) {
        let spec = if subset { AuctionSpec::random_subset(n, m, value, bids, seed) } else { AuctionSpec::uniform(n, m, value, bids) };
        let g = make_auction(spec).unwrap();
        let dense = g.to_dense(1 << 20).unwrap();
        let profile = MixedProfile::uniform(g.dims());
        for i in 0..n {
            let a = g.expected_utilities(i, &profile).unwrap();
            let b = dense.expected_utilities(i, &profile).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
        prop_assert!((g.welfare(&profile).unwrap() - dense.welfare(&profile).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn auction_mixed_profiles_match_dense(seed in any::<u64>(), ws in prop::collection::vec(simplex(3), 2)) {
        let g = make_auction(AuctionSpec::random_subset(2, 2, 3.0, 2, seed)).unwrap();
        let dense = g.to_dense(1 << 20).unwrap();
        let d = g.dims()[0];
        let ws: Vec<MixedStrategy> = ws.into_iter().map(|w| {
            let mut p = w.into_vec();
            p.resize(d, 0.0);
            let s: f64 = p.iter().sum();
            MixedStrategy::new(p.into_iter().map(|x| x / s).collect()).unwrap()
        }).collect();
        let profile = MixedProfile::new(ws);
        for i in 0..2 {
            let a = g.expected_utilities(i, &profile).unwrap();
            let b = dense.expected_utilities(i, &profile).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn routing_gradient_is_lipschitz(
        coeffs in prop::collection::vec((0.0f64..2.0, 0.0f64..2.0, 0.0f64..1.0), 2..5),
        flows in prop::collection::vec(0.2f64..2.0, 2..4),
        seeds in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 8), 8),
    ) {
        let lat: Vec<Latency> = coeffs.iter().map(|&(a, b, c)| Latency { a, b, c }).collect();
        let net = CongestionNetwork::parallel(&lat, &flows).unwrap();
        let m = lat.len();
        let profile = |k: usize| -> Vec<Vec<f64>> {
            (0..flows.len()).map(|i| {
                let raw = &seeds[(k + i) % seeds.len()][..m];
                let s: f64 = raw.iter().sum();
                raw.iter().map(|x| x / s * flows[i]).collect()
            }).collect()
        };
        let (w, y) = (profile(0), profile(3));
        let l = net.lipschitz_constant().l();
        let dist: f64 = w.iter().zip(&y).map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>()).sum();
        for i in 0..flows.len() {
            let (gw, gy) = (net.gradient(&w, i), net.gradient(&y, i));
            let gap = gw.iter().zip(&gy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(gap <= l * dist + 1e-9, "{} > {}", gap, l * dist);
        }
    }

    #[test]
    fn trace_csv_round_trips(seed in 0u64..1000, rounds in 1usize..30, eta in 0.01f64..2.0) {
        let game = random_game(&[2, 3], seed).unwrap();
        let specs = vec![PlayerSpec::Learner(LearnerSpec::optimistic_hedge(eta)), PlayerSpec::BestResponse];
        let mut sim = Simulation::from_specs(&game, &specs, FeedbackMode::Utility).unwrap();
        sim.run(rounds).unwrap();
        let t = sim.into_trace();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = Trace::empty(t.game_label.clone(), t.dims.clone(), t.scale, t.mode, t.learners.clone())
            .read_csv(buf.as_slice())
            .unwrap();
        for i in 0..2 {
            prop_assert_eq!(regret(&back, i), regret(&t, i));
        }
    }

    #[test]
    fn hedge_lower_bound_holds(half in 1usize..300, eta in 0.001f64..3.0) {
        let r = lower_bound_experiment(eta, 2 * half).unwrap();
        prop_assert!(r.r_game_a_prime >= r.closed_form_a_prime_lb - 1e-9);
        prop_assert!(r.max_regret() >= r.sqrt_floor);
        prop_assert!((r.r_game_a - r.alternating_form_a).abs() < 1e-8 * (1.0 + r.alternating_form_a));
    }

    #[test]
    fn config_parser_never_panics(text in "[\\[\\]a-z_.=,;:0-9 \n#-]{0,200}") {
        let _ = parse_config(&text, std::path::Path::new("."));
    }
}
