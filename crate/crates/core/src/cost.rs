//! Cost-minimization games: cost smoothness, Hedge with a first-order
//! (small-loss) learning-rate schedule, and the welfare bound that follows
//! from a first-order regret guarantee. Costs are taken in normalized units.

use crate::certificate::Certificate;
use crate::dynamics::{FeedbackMode, Trace};
use crate::error::{Error, Result};
use crate::game::{for_each_profile, MixedStrategy, NormalFormGame, SmoothnessCertificate, UtilityVector, CERT_TOL};
use crate::learner::{Family, LearnerInfo, OnlineLearner, Variation};
use crate::regularizer::softmax;

/// `min_s C(s)` with `C(s) = sum_i c_i(s)`, and the first minimizer.
pub fn cost_opt(game: &NormalFormGame, cap: u64) -> Result<(f64, Vec<usize>)> {
    check_cap(game, cap)?;
    let mut best = f64::INFINITY;
    let mut arg = vec![0; game.players()];
    for_each_profile(game.dims(), |_, s| {
        let c: f64 = game.pure_utilities(s).iter().sum();
        if c < best {
            best = c;
            arg.copy_from_slice(s);
        }
    });
    Ok((best, arg))
}

fn check_cap(game: &NormalFormGame, cap: u64) -> Result<()> {
    if game.profile_count() > cap as u128 {
        return Err(Error::EnumerationCap {
            count: game.profile_count(),
            cap,
        });
    }
    Ok(())
}

fn deviation_cost(game: &NormalFormGame, s_star: &[usize], s: &[usize], scratch: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..game.players() {
        scratch.copy_from_slice(s);
        scratch[i] = s_star[i];
        total += game.pure_utilities(scratch)[i];
    }
    total
}

/// Checks `sum_i c_i(s*_i, s_-i) <= lambda Opt' + mu C(s)` over every pure `s`.
/// `slack` is the smallest `lambda Opt' + mu C(s) - sum_i c_i(s*_i, s_-i)`.
pub fn verify_cost_smoothness(
    game: &NormalFormGame,
    lambda: f64,
    mu: f64,
    s_star: &[usize],
    cap: u64,
) -> Result<SmoothnessCertificate> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    if !(mu >= 0.0) {
        return Err(Error::param("mu", "must be nonnegative"));
    }
    game.check_pure(s_star)?;
    let (opt, _) = cost_opt(game, cap)?;
    let mut scratch = vec![0; game.players()];
    let mut slack = f64::INFINITY;
    let mut worst = vec![0; game.players()];
    for_each_profile(game.dims(), |_, s| {
        let c: f64 = game.pure_utilities(s).iter().sum();
        let v = lambda * opt + mu * c - deviation_cost(game, s_star, s, &mut scratch);
        if v < slack {
            slack = v;
            worst.copy_from_slice(s);
        }
    });
    Ok(SmoothnessCertificate {
        lambda,
        mu,
        s_star: s_star.to_vec(),
        opt,
        verified: slack >= -CERT_TOL,
        worst_profile: worst,
        slack,
    })
}

/// Smallest certifiable `lambda` at this `mu`, over every deviation profile.
pub fn best_cost_smoothness(game: &NormalFormGame, mu: f64, cap: u64) -> Result<SmoothnessCertificate> {
    let (opt, _) = cost_opt(game, cap)?;
    if !(opt > 0.0) {
        return Err(Error::Inconsistent("Opt' must be positive to fit lambda".into()));
    }
    let mut profiles = Vec::new();
    for_each_profile(game.dims(), |_, s| profiles.push(s.to_vec()));
    let mut scratch = vec![0; game.players()];
    let mut best: Option<(f64, usize)> = None;
    for (k, s_star) in profiles.iter().enumerate() {
        let mut need = f64::NEG_INFINITY;
        for s in &profiles {
            let c: f64 = game.pure_utilities(s).iter().sum();
            need = need.max((deviation_cost(game, s_star, s, &mut scratch) - mu * c) / opt);
        }
        if best.is_none_or(|(b, _)| need < b) {
            best = Some((need, k));
        }
    }
    let (lambda, k) = best.expect("at least one profile");
    verify_cost_smoothness(game, lambda.max(f64::MIN_POSITIVE), mu, &profiles[k], cap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Schedule {
    Fixed(f64),
    /// Budget on the epoch's best cumulative cost.
    Doubling { budget: f64 },
}

/// Hedge over costs, `w ∝ exp(-eta L)` with `L` the cumulative cost. The
/// doubling schedule runs epochs with `eta_r = sqrt(ln d / L_r)`, starting at
/// `L_1 = 1` and restarting with `L_{r+1} = 2 L_r` once the best cumulative
/// cost of the epoch exceeds `L_r`. The learner receives utilities `1 - c`.
#[derive(Debug, Clone)]
pub struct FirstOrderHedge {
    d: usize,
    schedule: Schedule,
    cumulative: Vec<f64>,
    epochs: usize,
    awaiting: bool,
    variation: Variation,
}

impl FirstOrderHedge {
    pub fn doubling(d: usize) -> Result<Self> {
        Self::build(d, Schedule::Doubling { budget: 1.0 })
    }

    pub fn fixed(d: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("must be positive, got {eta}")));
        }
        Self::build(d, Schedule::Fixed(eta))
    }

    fn build(d: usize, schedule: Schedule) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        Ok(FirstOrderHedge {
            d,
            schedule,
            cumulative: vec![0.0; d],
            epochs: 1,
            awaiting: false,
            variation: Variation::new(d),
        })
    }

    pub fn eta(&self) -> f64 {
        match self.schedule {
            Schedule::Fixed(eta) => eta,
            Schedule::Doubling { budget } => ((self.d as f64).ln() / budget).sqrt(),
        }
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// Hedge step on costs.
    pub fn observe_cost(&mut self, c: &[f64]) -> Result<()> {
        if !self.awaiting {
            return Err(Error::Protocol("observe called before play"));
        }
        if c.len() != self.d {
            return Err(Error::Dimension {
                player: 0,
                expected: self.d,
                got: c.len(),
            });
        }
        for (l, x) in self.cumulative.iter_mut().zip(c) {
            *l += x;
        }
        if let Schedule::Doubling { budget } = &mut self.schedule {
            let best = self.cumulative.iter().copied().fold(f64::INFINITY, f64::min);
            if best > *budget {
                *budget *= 2.0;
                self.cumulative.iter_mut().for_each(|l| *l = 0.0);
                self.epochs += 1;
            }
        }
        self.awaiting = false;
        Ok(())
    }
}

impl OnlineLearner for FirstOrderHedge {
    fn dim(&self) -> usize {
        self.d
    }

    fn play(&mut self) -> Result<MixedStrategy> {
        if self.awaiting {
            return Err(Error::Protocol("play called twice in one round"));
        }
        let eta = self.eta();
        let z: Vec<f64> = self.cumulative.iter().map(|l| -eta * l).collect();
        let w = MixedStrategy::from_vec_unchecked(softmax(&z));
        self.variation.record_play(w.probs());
        self.awaiting = true;
        Ok(w)
    }

    fn observe(&mut self, u: &UtilityVector) -> Result<()> {
        let c: Vec<f64> = u.values().iter().map(|x| 1.0 - x).collect();
        self.observe_cost(&c)?;
        self.variation.record_utility(u.values());
        Ok(())
    }

    fn variation(&self) -> &Variation {
        &self.variation
    }

    fn info(&self) -> LearnerInfo {
        LearnerInfo {
            label: match self.schedule {
                Schedule::Fixed(_) => "first-order-hedge-fixed".into(),
                Schedule::Doubling { .. } => "first-order-hedge".into(),
            },
            family: Family::FirstOrderHedge,
            dim: self.d,
            rvu: None,
        }
    }
}

/// Constants of the first-order regret bound
/// `sum <w^t, c^t> - sum c_s^t <= A1 sqrt(ln d sum c_s^t) + A2 ln d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderConstants {
    pub a1: f64,
    pub a2: f64,
}

impl FirstOrderConstants {
    /// `A = A1^2 mu / (1 - mu)^2 + 2 A2 / (1 - mu)`.
    pub fn combined(&self, mu: f64) -> f64 {
        self.a1 * self.a1 * mu / ((1.0 - mu) * (1.0 - mu)) + 2.0 * self.a2 / (1.0 - mu)
    }

    pub fn bound(&self, d: usize, comparator_cost: f64) -> f64 {
        let ln_d = (d as f64).ln();
        self.a1 * (ln_d * comparator_cost.max(0.0)).sqrt() + self.a2 * ln_d
    }
}

/// Regret against a fixed strategy together with that strategy's total cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderSample {
    pub regret: f64,
    pub comparator_cost: f64,
    pub d: usize,
}

/// One sample per (player, pure strategy) of a cost-mode trace.
pub fn first_order_samples(trace: &Trace) -> Vec<FirstOrderSample> {
    let mut out = Vec::new();
    for i in 0..trace.players() {
        let d = trace.dims[i];
        let mut realized = 0.0;
        let mut totals = vec![0.0; d];
        for t in 0..trace.rounds() {
            let u = &trace.utilities[t][i];
            let w = &trace.strategies[t][i];
            realized += w.iter().zip(u).map(|(p, x)| p * (1.0 - x)).sum::<f64>();
            for (c, x) in totals.iter_mut().zip(u) {
                *c += 1.0 - x;
            }
        }
        out.extend(totals.into_iter().map(|c| FirstOrderSample {
            regret: realized - c,
            comparator_cost: c,
            d,
        }));
    }
    out
}

/// Smallest constants consistent with every sample: `A2` from samples whose
/// comparator has zero cost, then `A1` from the rest.
pub fn fit_first_order_constants(samples: &[FirstOrderSample]) -> FirstOrderConstants {
    let usable = samples.iter().filter(|s| s.d > 1);
    let a2 = usable
        .clone()
        .filter(|s| s.comparator_cost <= 0.0)
        .map(|s| s.regret / (s.d as f64).ln())
        .fold(0.0, f64::max);
    let a1 = usable
        .filter(|s| s.comparator_cost > 0.0)
        .map(|s| {
            let ln_d = (s.d as f64).ln();
            (s.regret - a2 * ln_d).max(0.0) / (ln_d * s.comparator_cost).sqrt()
        })
        .fold(0.0, f64::max);
    FirstOrderConstants { a1, a2 }
}

/// `(1/T) sum_t C(w^t)` in normalized units.
pub fn average_cost(trace: &Trace) -> f64 {
    let mut total = 0.0;
    for t in 0..trace.rounds() {
        for i in 0..trace.players() {
            let u = &trace.utilities[t][i];
            total += trace.strategies[t][i].iter().zip(u).map(|(p, x)| p * (1.0 - x)).sum::<f64>();
        }
    }
    total / trace.rounds().max(1) as f64
}

/// Average cost against `lambda(1+mu)/(mu(1-mu)) Opt' + A n ln d / T`, evaluated
/// only when every player's trace meets the first-order bound against `s*_i`.
pub fn certify_first_order_welfare(
    trace: &Trace,
    smooth: &SmoothnessCertificate,
    constants: FirstOrderConstants,
) -> Result<Certificate> {
    const NAME: &str = "first-order-welfare";
    let mu = smooth.mu;
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::param("mu", format!("the first-order welfare bound needs mu in (0, 1), got {mu}")));
    }
    if trace.mode != FeedbackMode::Cost {
        return Err(Error::Inconsistent("trace was not produced in cost mode".into()));
    }
    if smooth.s_star.len() != trace.players() {
        return Err(Error::Inconsistent("smoothness certificate is for a different game".into()));
    }
    if !smooth.verified {
        return Ok(Certificate::not_applicable(NAME, "cost smoothness was not verified"));
    }
    let samples = first_order_samples(trace);
    let mut offset = 0;
    for (i, &d) in trace.dims.iter().enumerate() {
        let s = samples[offset + smooth.s_star[i]];
        offset += d;
        if s.regret > constants.bound(d, s.comparator_cost) + CERT_TOL {
            return Ok(Certificate::not_applicable(
                NAME,
                format!("player {i} violates the first-order regret bound against s*"),
            ));
        }
    }
    let n = trace.players() as f64;
    let ln_d = (trace.dims.iter().copied().max().unwrap_or(1) as f64).ln();
    let t = trace.rounds().max(1) as f64;
    let rhs = smooth.lambda * (1.0 + mu) / (mu * (1.0 - mu)) * smooth.opt + constants.combined(mu) * n * ln_d / t;
    Ok(Certificate::check(NAME, average_cost(trace), rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_mode, PlayerSpec};
    use crate::game::Scale;

    #[test]
    fn zero_costs_keep_uniform_play() {
        let mut h = FirstOrderHedge::doubling(3).unwrap();
        for _ in 0..50 {
            assert_eq!(h.play().unwrap().probs(), MixedStrategy::uniform(3).probs());
            h.observe_cost(&[0.0; 3]).unwrap();
        }
        assert_eq!(h.epochs(), 1);
    }

    #[test]
    fn doubling_restarts_on_breach() {
        let mut h = FirstOrderHedge::doubling(2).unwrap();
        for _ in 0..2 {
            h.play().unwrap();
            h.observe_cost(&[1.0, 1.0]).unwrap();
        }
        assert_eq!(h.epochs(), 2);
        assert!((h.eta() - (2f64.ln() / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fit_reproduces_samples() {
        let samples = [
            FirstOrderSample { regret: 1.0, comparator_cost: 0.0, d: 4 },
            FirstOrderSample { regret: 5.0, comparator_cost: 9.0, d: 4 },
        ];
        let c = fit_first_order_constants(&samples);
        for s in &samples {
            assert!(s.regret <= c.bound(s.d, s.comparator_cost) + 1e-12);
        }
        assert!((c.a2 - 1.0 / 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn constant_cost_game_certificate() {
        let g = NormalFormGame::dense(vec![2, 2], vec![0.5; 8], Scale::UNIT).unwrap();
        let smooth = verify_cost_smoothness(&g, 1.0, 0.5, &[0, 0], 100).unwrap();
        assert!(smooth.verified);
        let players = vec![
            PlayerSpec::FirstOrderHedge.build(2).unwrap(),
            PlayerSpec::FirstOrderHedge.build(2).unwrap(),
        ];
        let t = run_mode(&g, players, 20, FeedbackMode::Cost).unwrap();
        let c = fit_first_order_constants(&first_order_samples(&t));
        let cert = certify_first_order_welfare(&t, &smooth, c).unwrap();
        assert!(cert.passed(), "{cert}");
        assert!((average_cost(&t) - 1.0).abs() < 1e-12);
        let bad = SmoothnessCertificate { mu: 1.0, ..smooth };
        assert!(certify_first_order_welfare(&t, &bad, c).is_err());
    }
}
