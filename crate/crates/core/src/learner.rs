//! Online learners sharing a play/observe contract: Hedge, optimistic FTRL
//! with three recency-bias predictors, optimistic mirror descent and best
//! response, plus the regret-by-variation certificates that apply to them.

use std::collections::VecDeque;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::game::{MixedStrategy, UtilityVector, CERT_TOL};
use crate::regularizer::{log_normalize, project_simplex, shifted, softmax, NormPair, Regularizer};

/// Optimistic prediction `M^t` of the next utility vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predictor {
    Zero,
    LastUtility,
    /// Average of the last `H` utilities, zero-padded before round 1.
    WindowAverage(usize),
    /// Geometrically discounted average of all past utilities (including `u^0 = 0`).
    GeometricDiscount(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Hedge,
    Oftrl,
    Omd,
    BestResponse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerSpec {
    pub algorithm: Algorithm,
    pub regularizer: Regularizer,
    pub eta: f64,
    pub predictor: Predictor,
}

/// Constants of the regret-by-variation inequality
/// `regret <= alpha + beta * sum ||du||_*^2 - gamma * sum ||dw||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RvuParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub norm: NormPair,
}

impl RvuParams {
    /// Whether `beta <= gamma / (n-1)^2` (tightened by `d` for the l2 pair,
    /// since `||x||_1 <= sqrt(d) ||x||_2`).
    pub fn supports_sum_bound(&self, n: usize, d: usize) -> bool {
        let k = (n.max(2) - 1) as f64;
        let factor = match self.norm {
            NormPair::L1LInf => 1.0,
            NormPair::L2L2 => d as f64,
        };
        self.beta <= self.gamma / (factor * k * k) * (1.0 + 1e-12)
    }
}

impl LearnerSpec {
    pub fn hedge(eta: f64) -> Self {
        LearnerSpec {
            algorithm: Algorithm::Hedge,
            regularizer: Regularizer::NegativeEntropy,
            eta,
            predictor: Predictor::Zero,
        }
    }

    /// OFTRL with the entropy regularizer and the last utility double counted.
    pub fn optimistic_hedge(eta: f64) -> Self {
        Self::oftrl(Regularizer::NegativeEntropy, eta, Predictor::LastUtility)
    }

    pub fn oftrl(regularizer: Regularizer, eta: f64, predictor: Predictor) -> Self {
        LearnerSpec {
            algorithm: Algorithm::Oftrl,
            regularizer,
            eta,
            predictor,
        }
    }

    pub fn omd(regularizer: Regularizer, eta: f64, predictor: Predictor) -> Self {
        LearnerSpec {
            algorithm: Algorithm::Omd,
            regularizer,
            eta,
            predictor,
        }
    }

    pub fn best_response() -> Self {
        LearnerSpec {
            algorithm: Algorithm::BestResponse,
            regularizer: Regularizer::NegativeEntropy,
            eta: 1.0,
            predictor: Predictor::Zero,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm == Algorithm::BestResponse {
            return Ok(());
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::param("eta", format!("must be positive, got {}", self.eta)));
        }
        match self.predictor {
            Predictor::WindowAverage(0) => Err(Error::param("window", "H must be at least 1")),
            Predictor::GeometricDiscount(delta) if !(delta > 0.0 && delta < 1.0) => {
                Err(Error::param("discount", format!("must lie in (0, 1), got {delta}")))
            }
            _ => Ok(()),
        }
    }

    fn effective_predictor(&self) -> Predictor {
        match self.algorithm {
            Algorithm::Hedge | Algorithm::BestResponse => Predictor::Zero,
            _ => self.predictor,
        }
    }

    /// Parametric constants `(alpha, beta, gamma)` such that the learner with
    /// step `eta` satisfies the inequality with `(alpha/eta, eta*beta, gamma/eta)`.
    pub fn parametric_constants(&self, d: usize) -> Option<(f64, f64, f64)> {
        let diam = self.regularizer.diameter(d);
        match (self.algorithm, self.predictor) {
            (Algorithm::Omd, Predictor::LastUtility) => Some((diam.r_omd, 1.0, 1.0 / 8.0)),
            (Algorithm::Oftrl, Predictor::LastUtility) => Some((diam.r_ftrl, 1.0, 0.25)),
            (Algorithm::Oftrl, Predictor::WindowAverage(h)) => {
                Some((diam.r_ftrl, (h * h) as f64, 0.25))
            }
            (Algorithm::Oftrl, Predictor::GeometricDiscount(delta)) => {
                Some((diam.r_ftrl, 1.0 / (1.0 - delta).powi(3), 1.0 / 8.0))
            }
            _ => None,
        }
    }

    /// Declared constants at this spec's step size, if the variant has them.
    pub fn rvu_params(&self, d: usize) -> Option<RvuParams> {
        let (a, b, g) = self.parametric_constants(d)?;
        Some(RvuParams {
            alpha: a / self.eta,
            beta: self.eta * b,
            gamma: g / self.eta,
            norm: self.regularizer.norm_pair(),
        })
    }

    pub fn label(&self) -> String {
        match (self.algorithm, self.predictor) {
            (Algorithm::Hedge, _) => "hedge".into(),
            (Algorithm::BestResponse, _) => "best-response".into(),
            (Algorithm::Oftrl, Predictor::LastUtility)
                if self.regularizer == Regularizer::NegativeEntropy =>
            {
                "optimistic-hedge".into()
            }
            (alg, pred) => {
                let a = if alg == Algorithm::Oftrl { "oftrl" } else { "omd" };
                let r = match self.regularizer {
                    Regularizer::NegativeEntropy => "entropy",
                    Regularizer::SquaredEuclidean => "euclidean",
                };
                let p = match pred {
                    Predictor::Zero => "zero".to_string(),
                    Predictor::LastUtility => "last".to_string(),
                    Predictor::WindowAverage(h) => format!("window{h}"),
                    Predictor::GeometricDiscount(d) => format!("geometric{d}"),
                };
                format!("{a}-{r}-{p}")
            }
        }
    }
}

/// Learner families, as far as the certificates need to know.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Regularized(LearnerSpec),
    BestResponse,
    Doubling {
        inner: LearnerSpec,
        alpha: f64,
        beta: f64,
        gamma: f64,
        eta_star: f64,
    },
    FirstOrderHedge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerInfo {
    pub label: String,
    pub family: Family,
    pub dim: usize,
    pub rvu: Option<RvuParams>,
}

impl LearnerInfo {
    pub fn eta(&self) -> Option<f64> {
        match &self.family {
            Family::Regularized(spec) => Some(spec.eta),
            _ => None,
        }
    }

    /// Stability radius `kappa` with `||w^{t+1} - w^t||_1 <= kappa`, known for OFTRL.
    pub fn stability_kappa(&self) -> Option<f64> {
        match &self.family {
            Family::Regularized(spec)
                if matches!(spec.algorithm, Algorithm::Oftrl | Algorithm::Hedge)
                    && spec.regularizer == Regularizer::NegativeEntropy =>
            {
                Some(2.0 * spec.eta)
            }
            _ => None,
        }
    }
}

/// Running path-length sums `sum ||u^t - u^{t-1}||_inf^2` (with `u^0 = 0`) and
/// `sum ||w^t - w^{t-1}||_1^2` (with `w^0 = w^1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Variation {
    pub sum_du2: f64,
    pub sum_dw2: f64,
    prev_u: Vec<f64>,
    prev_w: Option<Vec<f64>>,
}

impl Variation {
    pub fn new(d: usize) -> Self {
        Variation {
            sum_du2: 0.0,
            sum_dw2: 0.0,
            prev_u: vec![0.0; d],
            prev_w: None,
        }
    }

    pub fn record_play(&mut self, w: &[f64]) {
        if let Some(prev) = &self.prev_w {
            let step = NormPair::L1LInf.primal_dist(w, prev);
            self.sum_dw2 += step * step;
        }
        self.prev_w = Some(w.to_vec());
    }

    /// Records `u` and returns `||u - u_prev||_inf^2`.
    pub fn record_utility(&mut self, u: &[f64]) -> f64 {
        let step = NormPair::L1LInf.dual_dist(u, &self.prev_u);
        self.sum_du2 += step * step;
        self.prev_u.copy_from_slice(u);
        step * step
    }
}

/// The per-round protocol every simulated player follows: `play` once, then
/// `observe` the expected-utility vector of that round.
pub trait OnlineLearner: Send {
    fn dim(&self) -> usize;

    fn play(&mut self) -> Result<MixedStrategy>;

    fn observe(&mut self, u: &UtilityVector) -> Result<()>;

    fn variation(&self) -> &Variation;

    fn info(&self) -> LearnerInfo;

    /// Learners that respond to the opponents' current play (best response)
    /// are scheduled after everyone else and receive that round's utilities.
    fn needs_opponent_view(&self) -> bool {
        false
    }

    fn play_against(&mut self, _current: &UtilityVector) -> Result<MixedStrategy> {
        self.play()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Play,
    Observe,
}

#[derive(Debug, Clone)]
enum PredictorState {
    Zero,
    Last(Vec<f64>),
    Window { h: usize, buf: VecDeque<Vec<f64>> },
    Geometric { delta: f64, num: Vec<f64>, den: f64 },
}

impl PredictorState {
    fn new(p: Predictor, d: usize) -> Self {
        match p {
            Predictor::Zero => PredictorState::Zero,
            Predictor::LastUtility => PredictorState::Last(vec![0.0; d]),
            Predictor::WindowAverage(h) => PredictorState::Window {
                h,
                buf: (0..h).map(|_| vec![0.0; d]).collect(),
            },
            Predictor::GeometricDiscount(delta) => PredictorState::Geometric {
                delta,
                num: vec![0.0; d],
                den: 1.0,
            },
        }
    }

    fn current(&self, d: usize) -> Vec<f64> {
        match self {
            PredictorState::Zero => vec![0.0; d],
            PredictorState::Last(u) => u.clone(),
            PredictorState::Window { h, buf } => {
                let mut m = vec![0.0; d];
                for u in buf {
                    for (a, b) in m.iter_mut().zip(u) {
                        *a += b;
                    }
                }
                m.iter().map(|x| x / *h as f64).collect()
            }
            PredictorState::Geometric { num, den, .. } => num.iter().map(|x| x / den).collect(),
        }
    }

    fn push(&mut self, u: &[f64]) {
        match self {
            PredictorState::Zero => {}
            PredictorState::Last(last) => last.copy_from_slice(u),
            PredictorState::Window { buf, .. } => {
                buf.pop_front();
                buf.push_back(u.to_vec());
            }
            PredictorState::Geometric { delta, num, den } => {
                for (a, b) in num.iter_mut().zip(u) {
                    *a = *delta * *a + b;
                }
                *den = *delta * *den + 1.0;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Secondary {
    None,
    /// Log-weights of the entropic secondary iterate `g^{t-1}`.
    Log(Vec<f64>),
    Point(Vec<f64>),
}

/// Hedge, optimistic FTRL and optimistic mirror descent.
#[derive(Debug, Clone)]
pub struct RegularizedLearner {
    spec: LearnerSpec,
    d: usize,
    cumulative: Vec<f64>,
    predictor: PredictorState,
    secondary: Secondary,
    phase: Phase,
    last_prediction: Vec<f64>,
    variation: Variation,
}

impl RegularizedLearner {
    pub fn new(spec: LearnerSpec, d: usize) -> Result<Self> {
        if spec.algorithm == Algorithm::BestResponse {
            return Err(Error::MissingOracle);
        }
        spec.validate()?;
        let g0 = spec.regularizer.initial_point(d)?;
        let secondary = match (spec.algorithm, spec.regularizer) {
            (Algorithm::Omd, Regularizer::NegativeEntropy) => {
                Secondary::Log(g0.probs().iter().map(|p| p.ln()).collect())
            }
            (Algorithm::Omd, Regularizer::SquaredEuclidean) => Secondary::Point(g0.into_vec()),
            _ => Secondary::None,
        };
        Ok(RegularizedLearner {
            spec,
            d,
            cumulative: vec![0.0; d],
            predictor: PredictorState::new(spec.effective_predictor(), d),
            secondary,
            phase: Phase::Play,
            last_prediction: vec![0.0; d],
            variation: Variation::new(d),
        })
    }

    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    /// `M^t` used by the most recent `play`.
    pub fn last_prediction(&self) -> &[f64] {
        &self.last_prediction
    }

    /// Current secondary iterate `g^t` of mirror descent.
    pub fn secondary(&self) -> Option<Vec<f64>> {
        match &self.secondary {
            Secondary::None => None,
            Secondary::Log(l) => Some(l.iter().map(|x| x.exp()).collect()),
            Secondary::Point(p) => Some(p.clone()),
        }
    }
}

impl OnlineLearner for RegularizedLearner {
    fn dim(&self) -> usize {
        self.d
    }

    fn play(&mut self) -> Result<MixedStrategy> {
        if self.phase != Phase::Play {
            return Err(Error::Protocol("play called twice in one round"));
        }
        let m = self.predictor.current(self.d);
        let eta = self.spec.eta;
        let w = match &self.secondary {
            Secondary::None => {
                let target: Vec<f64> = self.cumulative.iter().zip(&m).map(|(c, x)| c + x).collect();
                self.spec.regularizer.ftrl_argmax(&target, eta)?
            }
            Secondary::Log(log_g) => MixedStrategy::from_vec_unchecked(softmax(&shifted(log_g, &m, eta))),
            Secondary::Point(g) => {
                let v: Vec<f64> = g.iter().zip(&m).map(|(a, b)| a + eta * b).collect();
                MixedStrategy::from_vec_unchecked(project_simplex(&v))
            }
        };
        self.last_prediction = m;
        self.variation.record_play(w.probs());
        self.phase = Phase::Observe;
        Ok(w)
    }

    fn observe(&mut self, u: &UtilityVector) -> Result<()> {
        if self.phase != Phase::Observe {
            return Err(Error::Protocol("observe called before play"));
        }
        if u.len() != self.d {
            return Err(Error::Dimension {
                player: 0,
                expected: self.d,
                got: u.len(),
            });
        }
        let u = u.values();
        for (c, x) in self.cumulative.iter_mut().zip(u) {
            *c += x;
        }
        self.predictor.push(u);
        let eta = self.spec.eta;
        match &mut self.secondary {
            Secondary::None => {}
            Secondary::Log(log_g) => *log_g = log_normalize(&shifted(log_g, u, eta)),
            Secondary::Point(g) => {
                let v: Vec<f64> = g.iter().zip(u).map(|(a, b)| a + eta * b).collect();
                *g = project_simplex(&v);
            }
        }
        self.variation.record_utility(u);
        self.phase = Phase::Play;
        Ok(())
    }

    fn variation(&self) -> &Variation {
        &self.variation
    }

    fn info(&self) -> LearnerInfo {
        LearnerInfo {
            label: self.spec.label(),
            family: Family::Regularized(self.spec),
            dim: self.d,
            rvu: self.spec.rvu_params(self.d),
        }
    }
}

/// Plays a pure best response (lowest index on ties) to the opponents'
/// current mixed strategies.
#[derive(Debug, Clone)]
pub struct BestResponder {
    d: usize,
    phase: Phase,
    variation: Variation,
}

impl BestResponder {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        Ok(BestResponder {
            d,
            phase: Phase::Play,
            variation: Variation::new(d),
        })
    }
}

impl OnlineLearner for BestResponder {
    fn dim(&self) -> usize {
        self.d
    }

    fn play(&mut self) -> Result<MixedStrategy> {
        Err(Error::MissingOracle)
    }

    fn needs_opponent_view(&self) -> bool {
        true
    }

    fn play_against(&mut self, current: &UtilityVector) -> Result<MixedStrategy> {
        if self.phase != Phase::Play {
            return Err(Error::Protocol("play called twice in one round"));
        }
        let mut best = 0;
        for (k, &x) in current.values().iter().enumerate() {
            if x > current.values()[best] {
                best = k;
            }
        }
        let w = MixedStrategy::point(self.d, best);
        self.variation.record_play(w.probs());
        self.phase = Phase::Observe;
        Ok(w)
    }

    fn observe(&mut self, u: &UtilityVector) -> Result<()> {
        if self.phase != Phase::Observe {
            return Err(Error::Protocol("observe called before play"));
        }
        self.variation.record_utility(u.values());
        self.phase = Phase::Play;
        Ok(())
    }

    fn variation(&self) -> &Variation {
        &self.variation
    }

    fn info(&self) -> LearnerInfo {
        LearnerInfo {
            label: "best-response".into(),
            family: Family::BestResponse,
            dim: self.d,
            rvu: None,
        }
    }
}

/// Builds a learner from its spec. Best response has no standalone form; the
/// dynamics engine supplies its opponent view.
pub fn make_learner(spec: &LearnerSpec, d: usize) -> Result<Box<dyn OnlineLearner>> {
    Ok(Box::new(RegularizedLearner::new(*spec, d)?))
}

/// The three sides of the regret-by-variation inequality on one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RvuCertificate {
    pub regret: f64,
    pub alpha: f64,
    /// `beta * sum ||u^t - u^{t-1}||_*^2`
    pub utility_variation: f64,
    /// `gamma * sum ||w^t - w^{t-1}||^2`
    pub strategy_variation: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl RvuCertificate {
    pub fn to_certificate(&self, name: impl Into<String>) -> Certificate {
        Certificate::check(name, self.regret, self.rhs)
    }
}

/// Path lengths in the given norm pair: `sum ||u^t - u^{t-1}||_*^2` with
/// `u^0 = 0` and `sum ||w^t - w^{t-1}||^2` with `w^0 = w^1`.
pub fn path_lengths(utilities: &[Vec<f64>], plays: &[Vec<f64>], norm: NormPair) -> (f64, f64) {
    let mut du = 0.0;
    for (t, u) in utilities.iter().enumerate() {
        let x = if t == 0 {
            norm.dual(u)
        } else {
            norm.dual_dist(u, &utilities[t - 1])
        };
        du += x * x;
    }
    let dw = plays
        .windows(2)
        .map(|p| {
            let x = norm.primal_dist(&p[1], &p[0]);
            x * x
        })
        .sum();
    (du, dw)
}

/// Checks `sum <w* - w^t, u^t> <= alpha + beta * sum ||du||_*^2 - gamma * sum ||dw||^2`.
pub fn certify_rvu(
    utilities: &[Vec<f64>],
    plays: &[Vec<f64>],
    params: &RvuParams,
    comparator: &[f64],
) -> Result<RvuCertificate> {
    if utilities.len() != plays.len() {
        return Err(Error::Inconsistent(format!(
            "{} utility vectors but {} plays",
            utilities.len(),
            plays.len()
        )));
    }
    let regret: f64 = utilities
        .iter()
        .zip(plays)
        .map(|(u, w)| comparator.iter().zip(w).zip(u).map(|((a, b), x)| (a - b) * x).sum::<f64>())
        .sum();
    let (du, dw) = path_lengths(utilities, plays, params.norm);
    let utility_variation = params.beta * du;
    let strategy_variation = params.gamma * dw;
    let rhs = params.alpha + utility_variation - strategy_variation;
    Ok(RvuCertificate {
        regret,
        alpha: params.alpha,
        utility_variation,
        strategy_variation,
        rhs,
        passed: regret <= rhs + CERT_TOL,
    })
}

/// Runs [`certify_rvu`] against the best vertex in hindsight.
pub fn certify_rvu_best_vertex(
    utilities: &[Vec<f64>],
    plays: &[Vec<f64>],
    params: &RvuParams,
) -> Result<RvuCertificate> {
    let d = plays.first().map_or(0, Vec::len);
    let mut totals = vec![0.0; d];
    for u in utilities {
        for (a, b) in totals.iter_mut().zip(u) {
            *a += b;
        }
    }
    let mut best = 0;
    for k in 0..d {
        if totals[k] > totals[best] {
            best = k;
        }
    }
    let mut comparator = vec![0.0; d];
    if d > 0 {
        comparator[best] = 1.0;
    }
    certify_rvu(utilities, plays, params, &comparator)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub max_step: f64,
    pub bound: f64,
    pub violations: usize,
    pub passed: bool,
}

/// Checks `||w^{t+1} - w^t||_1 <= 2 eta` for every consecutive pair of plays.
pub fn certify_stability(plays: &[Vec<f64>], eta: f64) -> StabilityReport {
    let bound = 2.0 * eta;
    let mut max_step: f64 = 0.0;
    let mut violations = 0;
    for p in plays.windows(2) {
        let step = NormPair::L1LInf.primal_dist(&p[1], &p[0]);
        max_step = max_step.max(step);
        if step > bound + CERT_TOL {
            violations += 1;
        }
    }
    StabilityReport {
        max_step,
        bound,
        violations,
        passed: violations == 0,
    }
}

/// Intermediate mirror-descent bound
/// `regret <= R/eta + sum ||u^t - M^t||_* ||w^t - g^t|| - (1/2eta) sum (||w^t - g^t||^2 + ||w^t - g^{t-1}||^2)`.
/// `secondaries` holds `g^0, ..., g^T`.
#[allow(clippy::too_many_arguments)]
pub fn certify_omd_intermediate(
    utilities: &[Vec<f64>],
    predictions: &[Vec<f64>],
    plays: &[Vec<f64>],
    secondaries: &[Vec<f64>],
    r: f64,
    eta: f64,
    norm: NormPair,
    comparator: &[f64],
) -> Result<Certificate> {
    let t = utilities.len();
    if predictions.len() != t || plays.len() != t || secondaries.len() != t + 1 {
        return Err(Error::Inconsistent("sequence lengths disagree".into()));
    }
    let mut regret = 0.0;
    let mut cross = 0.0;
    let mut neg = 0.0;
    for k in 0..t {
        let (u, m, w) = (&utilities[k], &predictions[k], &plays[k]);
        regret += comparator.iter().zip(w).zip(u).map(|((a, b), x)| (a - b) * x).sum::<f64>();
        let wg = norm.primal_dist(w, &secondaries[k + 1]);
        let wg_prev = norm.primal_dist(w, &secondaries[k]);
        cross += norm.dual_dist(u, m) * wg;
        neg += wg * wg + wg_prev * wg_prev;
    }
    Ok(Certificate::check("omd-intermediate", regret, r / eta + cross - neg / (2.0 * eta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uv(v: &[f64]) -> UtilityVector {
        UtilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn declared_constants() {
        let p = LearnerSpec::optimistic_hedge(0.5).rvu_params(2).unwrap();
        assert!((p.alpha - 2f64.ln() / 0.5).abs() < 1e-12);
        assert_eq!((p.beta, p.gamma), (0.5, 0.5));
        let p = LearnerSpec::omd(Regularizer::NegativeEntropy, 0.5, Predictor::LastUtility)
            .rvu_params(2)
            .unwrap();
        assert_eq!(p.gamma, 0.25);
        let p = LearnerSpec::oftrl(Regularizer::NegativeEntropy, 0.1, Predictor::WindowAverage(3))
            .rvu_params(4)
            .unwrap();
        assert!((p.beta - 0.9).abs() < 1e-12);
        let p = LearnerSpec::oftrl(Regularizer::NegativeEntropy, 0.1, Predictor::GeometricDiscount(0.5))
            .rvu_params(4)
            .unwrap();
        assert!((p.beta - 0.8).abs() < 1e-12 && (p.gamma - 1.25).abs() < 1e-12);
        assert!(LearnerSpec::hedge(0.1).rvu_params(3).is_none());
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(RegularizedLearner::new(LearnerSpec::hedge(-1.0), 2).is_err());
        let w0 = LearnerSpec::oftrl(Regularizer::NegativeEntropy, 0.1, Predictor::WindowAverage(0));
        assert!(RegularizedLearner::new(w0, 2).is_err());
        let g1 = LearnerSpec::oftrl(Regularizer::NegativeEntropy, 0.1, Predictor::GeometricDiscount(1.0));
        assert!(RegularizedLearner::new(g1, 2).is_err());
        assert!(matches!(
            make_learner(&LearnerSpec::best_response(), 2),
            Err(Error::MissingOracle)
        ));
    }

    #[test]
    fn optimistic_hedge_double_counts_last_utility() {
        let mut l = RegularizedLearner::new(LearnerSpec::optimistic_hedge(2f64.ln()), 2).unwrap();
        assert_eq!(l.play().unwrap().probs(), &[0.5, 0.5]);
        l.observe(&uv(&[1.0, 0.0])).unwrap();
        l.play().unwrap();
        l.observe(&uv(&[0.0, 1.0])).unwrap();
        let w = l.play().unwrap();
        // cumulative (1,1) plus last (0,1) gives softmax(ln2 * (1,2)) = (1/3, 2/3)
        assert!((w.probs()[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn omd_secondary_update() {
        let spec = LearnerSpec::omd(Regularizer::NegativeEntropy, 2f64.ln(), Predictor::LastUtility);
        let mut l = RegularizedLearner::new(spec, 2).unwrap();
        assert_eq!(l.play().unwrap().probs(), &[0.5, 0.5]);
        l.observe(&uv(&[1.0, 0.0])).unwrap();
        let g1 = l.secondary().unwrap();
        assert!((g1[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn instrumentation_starts_from_zero_utility() {
        let mut l = RegularizedLearner::new(LearnerSpec::hedge(0.1), 2).unwrap();
        l.play().unwrap();
        l.observe(&uv(&[1.0, 0.0])).unwrap();
        assert_eq!(l.variation().sum_du2, 1.0);
        assert_eq!(l.variation().sum_dw2, 0.0);
    }

    #[test]
    fn geometric_predictor_matches_hand_evaluation() {
        let mut p = PredictorState::new(Predictor::GeometricDiscount(0.5), 2);
        assert_eq!(p.current(2), vec![0.0, 0.0]);
        p.push(&[1.0, 0.0]);
        let m = p.current(2);
        assert!((m[0] - 2.0 / 3.0).abs() < 1e-15 && m[1] == 0.0);
    }

    #[test]
    fn window_predictor_zero_pads() {
        let mut p = PredictorState::new(Predictor::WindowAverage(3), 1);
        p.push(&[0.9]);
        assert!((p.current(1)[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn protocol_violations() {
        let mut l = RegularizedLearner::new(LearnerSpec::hedge(0.1), 2).unwrap();
        assert!(l.observe(&uv(&[0.0, 0.0])).is_err());
        l.play().unwrap();
        assert!(l.play().is_err());
        assert!(l.observe(&uv(&[0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn best_responder_breaks_ties_low() {
        let mut b = BestResponder::new(3).unwrap();
        assert!(b.play().is_err());
        let w = b.play_against(&uv(&[0.2, 0.7, 0.7])).unwrap();
        assert_eq!(w.probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_rvu_sequence_passes() {
        let params = LearnerSpec::optimistic_hedge(0.1).rvu_params(2).unwrap();
        let c = certify_rvu(&[], &[], &params, &[1.0, 0.0]).unwrap();
        assert_eq!(c.regret, 0.0);
        assert!(c.passed);
    }

    #[test]
    fn stability_on_constant_utilities() {
        let mut l = RegularizedLearner::new(LearnerSpec::optimistic_hedge(0.1), 2).unwrap();
        let mut plays = Vec::new();
        for _ in 0..200 {
            plays.push(l.play().unwrap().into_vec());
            l.observe(&uv(&[1.0, 0.0])).unwrap();
        }
        let r = certify_stability(&plays, 0.1);
        assert!(r.passed);
        let last = NormPair::L1LInf.primal_dist(&plays[199], &plays[198]);
        assert!(last < 1e-6);
    }
}
