//! Doubling-trick wrapper that makes a parametric learner robust to
//! adversarial opponents while keeping its fast rate in self-play.

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::game::{MixedStrategy, UtilityVector};
use crate::learner::{Family, LearnerInfo, LearnerSpec, OnlineLearner, RegularizedLearner, Variation};

/// One finished or running epoch of the wrapper.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub index: usize,
    /// First round (1-based) played in this epoch.
    pub start: usize,
    /// Last round, or `None` while running.
    pub end: Option<usize>,
    pub budget: f64,
    pub eta: f64,
    /// Global utility variation when the epoch closed.
    pub variation_at_end: Option<f64>,
}

/// Runs the inner learner with step `min(alpha / sqrt(B_r), eta_star)` and
/// restarts it with a doubled budget whenever the global utility variation
/// `sum_{t <= tau} ||u^t - u^{t-1}||_*^2` reaches `B_r`.
#[derive(Debug, Clone)]
pub struct DoublingLearner {
    spec: LearnerSpec,
    alpha: f64,
    beta: f64,
    gamma: f64,
    eta_star: f64,
    d: usize,
    budget: f64,
    inner: RegularizedLearner,
    epochs: Vec<EpochRecord>,
    round: usize,
    pending_restart: bool,
    variation: Variation,
}

impl DoublingLearner {
    /// Wraps `spec` (its `eta` is ignored) using the inner learner's own
    /// parametric constants.
    pub fn new(spec: LearnerSpec, d: usize, eta_star: f64) -> Result<Self> {
        let (alpha, beta, gamma) = spec
            .parametric_constants(d)
            .ok_or_else(|| Error::param("robust", format!("{} has no parametric constants", spec.label())))?;
        Self::with_constants(spec, d, alpha, beta, gamma, eta_star)
    }

    pub fn with_constants(
        spec: LearnerSpec,
        d: usize,
        alpha: f64,
        beta: f64,
        gamma: f64,
        eta_star: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
        }
        if !(eta_star > 0.0 && eta_star.is_finite()) {
            return Err(Error::param("eta_star", format!("must be positive, got {eta_star}")));
        }
        let eta = epoch_eta(alpha, 1.0, eta_star);
        let inner = RegularizedLearner::new(spec.with_eta(eta), d)?;
        Ok(DoublingLearner {
            spec,
            alpha,
            beta,
            gamma,
            eta_star,
            d,
            budget: 1.0,
            inner,
            epochs: vec![EpochRecord {
                index: 1,
                start: 1,
                end: None,
                budget: 1.0,
                eta,
                variation_at_end: None,
            }],
            round: 0,
            pending_restart: false,
            variation: Variation::new(d),
        })
    }

    pub fn epochs(&self) -> &[EpochRecord] {
        &self.epochs
    }

    /// Step size of the next round.
    pub fn current_eta(&self) -> f64 {
        epoch_eta(self.alpha, self.budget, self.eta_star)
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Global `sum ||u^t - u^{t-1}||_*^2`, never reset between epochs.
    pub fn variation_total(&self) -> f64 {
        self.variation.sum_du2
    }

    pub fn constants(&self) -> (f64, f64, f64, f64) {
        (self.alpha, self.beta, self.gamma, self.eta_star)
    }

    /// Closes the current epoch; the fresh run starts at the next `play`.
    fn advance(&mut self) {
        let total = self.variation.sum_du2;
        let current = self.epochs.last_mut().expect("at least one epoch");
        current.end = Some(self.round);
        current.variation_at_end = Some(total);
        self.budget *= 2.0;
        self.pending_restart = true;
    }

    fn restart(&mut self) -> Result<()> {
        let eta = epoch_eta(self.alpha, self.budget, self.eta_star);
        self.inner = RegularizedLearner::new(self.spec.with_eta(eta), self.d)?;
        self.epochs.push(EpochRecord {
            index: self.epochs.len() + 1,
            start: self.round + 1,
            end: None,
            budget: self.budget,
            eta,
            variation_at_end: None,
        });
        self.pending_restart = false;
        Ok(())
    }
}

fn epoch_eta(alpha: f64, budget: f64, eta_star: f64) -> f64 {
    (alpha / budget.sqrt()).min(eta_star)
}

impl OnlineLearner for DoublingLearner {
    fn dim(&self) -> usize {
        self.d
    }

    fn play(&mut self) -> Result<MixedStrategy> {
        if self.pending_restart {
            self.restart()?;
        }
        let w = self.inner.play()?;
        self.variation.record_play(w.probs());
        Ok(w)
    }

    fn observe(&mut self, u: &UtilityVector) -> Result<()> {
        self.inner.observe(u)?;
        self.round += 1;
        self.variation.record_utility(u.values());
        if self.variation.sum_du2 >= self.budget {
            self.advance();
        }
        Ok(())
    }

    fn variation(&self) -> &Variation {
        &self.variation
    }

    fn info(&self) -> LearnerInfo {
        LearnerInfo {
            label: format!("robust-{}", self.spec.label()),
            family: Family::Doubling {
                inner: self.spec,
                alpha: self.alpha,
                beta: self.beta,
                gamma: self.gamma,
                eta_star: self.eta_star,
            },
            dim: self.d,
            rvu: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaStarMode {
    /// Tuned so wrapped learners keep the constant sum-of-regrets rate.
    SumRegret,
    /// Tuned for the `T^{1/4}` individual rate.
    Individual,
}

pub fn recommended_eta_star(mode: EtaStarMode, n: usize, beta: f64, gamma: f64, rounds: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n", "need at least two players"));
    }
    if rounds < 2 {
        return Err(Error::param("rounds", "horizon must be at least 2"));
    }
    let t = rounds as f64;
    Ok(match mode {
        EtaStarMode::SumRegret => {
            let k = (n - 1) as f64;
            gamma / ((2.0 + beta) * k * k * t.ln())
        }
        EtaStarMode::Individual => t.powf(-0.25),
    })
}

/// Both regret bounds of the wrapper, given the realized regret and path lengths.
#[allow(clippy::too_many_arguments)]
pub fn certify_wrapper_bounds(
    regret: f64,
    sum_du2: f64,
    sum_dw2: f64,
    rounds: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    eta_star: f64,
) -> (Certificate, Certificate) {
    let log_t = (rounds.max(1) as f64).ln();
    let by_variation = log_t * (2.0 + alpha / eta_star + (2.0 + eta_star * beta) * sum_du2) - gamma / eta_star * sum_dw2;
    let by_sqrt = log_t * (1.0 + alpha / eta_star + (1.0 + alpha * beta) * (2.0 * sum_du2).sqrt());
    (
        Certificate::check("robust-variation-bound", regret, by_variation),
        Certificate::check("robust-sqrt-bound", regret, by_sqrt),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizer::Regularizer;

    fn uv(v: &[f64]) -> UtilityVector {
        UtilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn first_epochs_use_eta_star() {
        let w = DoublingLearner::new(LearnerSpec::optimistic_hedge(1.0), 2, 0.1).unwrap();
        assert_eq!(w.current_eta(), 0.1);
        assert!((2f64.ln() / 2f64.sqrt()).min(0.1) == 0.1);
    }

    #[test]
    fn constant_stream_switches_once() {
        let mut w = DoublingLearner::new(LearnerSpec::optimistic_hedge(1.0), 3, 0.1).unwrap();
        for _ in 0..100 {
            w.play().unwrap();
            w.observe(&uv(&[1.0, 0.0, 0.5])).unwrap();
        }
        assert_eq!(w.epochs().len(), 2);
        assert_eq!(w.epochs()[0].end, Some(1));
        assert_eq!(w.epochs()[1].start, 2);
        assert_eq!(w.variation_total(), 1.0);
    }

    #[test]
    fn alternating_stream_epoch_count() {
        let mut w = DoublingLearner::new(LearnerSpec::optimistic_hedge(1.0), 2, 0.1).unwrap();
        for t in 0..1024 {
            w.play().unwrap();
            let u = if t % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
            w.observe(&uv(&u)).unwrap();
        }
        assert_eq!(w.epochs().len(), 11);
        let etas: Vec<f64> = w.epochs().iter().map(|e| e.eta).collect();
        assert!(etas.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn rejects_unparametric_inner() {
        assert!(DoublingLearner::new(LearnerSpec::hedge(0.1), 2, 0.1).is_err());
        let omd = LearnerSpec::omd(Regularizer::NegativeEntropy, 0.1, crate::Predictor::LastUtility);
        assert!(DoublingLearner::new(omd, 2, 0.0).is_err());
    }

    #[test]
    fn eta_star_recommendations() {
        let t = 9f64.exp().round() as usize;
        let e = recommended_eta_star(EtaStarMode::SumRegret, 4, 1.0, 0.25, t).unwrap();
        assert!((e - 0.25 / (3.0 * 9.0 * (t as f64).ln())).abs() < 1e-15);
        assert_eq!(recommended_eta_star(EtaStarMode::Individual, 4, 1.0, 0.25, 4096).unwrap(), 0.125);
        assert!(recommended_eta_star(EtaStarMode::Individual, 1, 1.0, 0.25, 4096).is_err());
    }
}
