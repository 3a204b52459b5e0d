//! Repeated play with exact expected-utility feedback, regret accounting and
//! the trace-level certificates.

use std::io::Write;

use crate::certificate::Certificate;
use crate::cost::FirstOrderHedge;
use crate::error::{Error, Result};
use crate::game::{poa_welfare_bound, MixedProfile, MixedStrategy, NormalFormGame, Scale, SmoothnessCertificate, UtilityVector};
use crate::library::AuctionSpec;
use crate::learner::{
    certify_rvu_best_vertex, certify_stability, path_lengths, Algorithm, BestResponder, Family, LearnerInfo,
    LearnerSpec, OnlineLearner, Predictor, RegularizedLearner,
};
use crate::regularizer::{NormPair, Regularizer};
use crate::robust::{certify_wrapper_bounds, DoublingLearner};

/// How the game's oracle values are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    Utility,
    /// Oracle values are costs; learners receive `1 - c`.
    Cost,
}

/// What a player runs; `build` turns it into a learner for `d` strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum PlayerSpec {
    Learner(LearnerSpec),
    Robust { inner: LearnerSpec, eta_star: f64 },
    FirstOrderHedge,
    FirstOrderHedgeFixed(f64),
    BestResponse,
}

impl PlayerSpec {
    pub fn build(&self, d: usize) -> Result<Box<dyn OnlineLearner>> {
        Ok(match self {
            PlayerSpec::Learner(spec) if spec.algorithm == Algorithm::BestResponse => Box::new(BestResponder::new(d)?),
            PlayerSpec::Learner(spec) => Box::new(RegularizedLearner::new(*spec, d)?),
            PlayerSpec::Robust { inner, eta_star } => Box::new(DoublingLearner::new(*inner, d, *eta_star)?),
            PlayerSpec::FirstOrderHedge => Box::new(FirstOrderHedge::doubling(d)?),
            PlayerSpec::FirstOrderHedgeFixed(eta) => Box::new(FirstOrderHedge::fixed(d, *eta)?),
            PlayerSpec::BestResponse => Box::new(BestResponder::new(d)?),
        })
    }

    pub fn label(&self) -> String {
        match self {
            PlayerSpec::Learner(spec) => spec.label(),
            PlayerSpec::Robust { inner, .. } => format!("robust-{}", inner.label()),
            PlayerSpec::FirstOrderHedge => "first-order-hedge".into(),
            PlayerSpec::FirstOrderHedgeFixed(_) => "first-order-hedge-fixed".into(),
            PlayerSpec::BestResponse => "best-response".into(),
        }
    }
}

/// Everything observed during a run. Utilities are normalized (in cost mode,
/// `1 - c`); welfare is raw (in cost mode, total raw cost).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub game_label: String,
    pub dims: Vec<usize>,
    pub scale: Scale,
    pub mode: FeedbackMode,
    pub learners: Vec<LearnerInfo>,
    /// `strategies[t][i]`
    pub strategies: Vec<Vec<Vec<f64>>>,
    /// `utilities[t][i]`
    pub utilities: Vec<Vec<Vec<f64>>>,
    pub welfare: Vec<f64>,
    /// Running `sum ||u^t - u^{t-1}||_inf^2` per round and player.
    pub du2_cum: Vec<Vec<f64>>,
    /// Running `sum ||w^t - w^{t-1}||_1^2` per round and player.
    pub dw2_cum: Vec<Vec<f64>>,
    /// Present when the game is an auction, for bid trajectories.
    pub auction: Option<AuctionSpec>,
}

impl Trace {
    /// A trace with no rounds yet.
    pub fn empty(game_label: impl Into<String>, dims: Vec<usize>, scale: Scale, mode: FeedbackMode, learners: Vec<LearnerInfo>) -> Self {
        Trace {
            game_label: game_label.into(),
            dims,
            scale,
            mode,
            learners,
            strategies: Vec::new(),
            utilities: Vec::new(),
            welfare: Vec::new(),
            du2_cum: Vec::new(),
            dw2_cum: Vec::new(),
            auction: None,
        }
    }

    pub fn rounds(&self) -> usize {
        self.welfare.len()
    }

    pub fn players(&self) -> usize {
        self.dims.len()
    }

    pub fn plays_of(&self, i: usize) -> Vec<Vec<f64>> {
        self.strategies.iter().map(|r| r[i].clone()).collect()
    }

    pub fn utilities_of(&self, i: usize) -> Vec<Vec<f64>> {
        self.utilities.iter().map(|r| r[i].clone()).collect()
    }

    /// Writes `t,player,regret_to_date,welfare,du2_cum,dw2_cum,strategy_0..,utility_0..`
    /// with rounds 1-based and vectors padded to the widest player.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let width = self.dims.iter().copied().max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["t", "player", "regret_to_date", "welfare", "du2_cum", "dw2_cum"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..width).map(|k| format!("strategy_{k}")));
        header.extend((0..width).map(|k| format!("utility_{k}")));
        w.write_record(&header).map_err(csv_err)?;
        let series: Vec<Vec<f64>> = (0..self.players()).map(|i| regret_series(self, i)).collect();
        for t in 0..self.rounds() {
            for i in 0..self.players() {
                let mut rec = vec![
                    (t + 1).to_string(),
                    i.to_string(),
                    fmt_f64(series[i][t]),
                    fmt_f64(self.welfare[t]),
                    fmt_f64(self.du2_cum[t][i]),
                    fmt_f64(self.dw2_cum[t][i]),
                ];
                for v in [&self.strategies[t][i], &self.utilities[t][i]] {
                    for k in 0..width {
                        rec.push(v.get(k).map_or(String::new(), |p| fmt_f64(*p)));
                    }
                }
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows written by [`Trace::write_csv`] into a trace with no rounds,
    /// whose `dims` must match the file.
    pub fn read_csv<R: std::io::Read>(mut self, input: R) -> Result<Self> {
        if self.rounds() > 0 {
            return Err(Error::Inconsistent("trace already holds rounds".into()));
        }
        let n = self.players();
        let width = self.dims.iter().copied().max().unwrap_or(0);
        let mut r = csv::Reader::from_reader(input);
        let expected = 6 + 2 * width;
        if r.headers().map_err(csv_err)?.len() != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected {expected} columns for dims {:?}", self.dims),
            });
        }
        let mut du2 = Vec::new();
        let mut dw2 = Vec::new();
        let mut strategies = Vec::new();
        let mut utilities = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let line = k + 2;
            let bad = |message: String| Error::Parse { line, message };
            let num = |j: usize| -> Result<f64> {
                rec.get(j)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|_| bad(format!("column {j} is not a number")))
            };
            let (t, i) = (k / n, k % n);
            if rec.get(0) != Some((t + 1).to_string().as_str()) || rec.get(1) != Some(i.to_string().as_str()) {
                return Err(bad(format!("expected round {} player {i}", t + 1)));
            }
            let d = self.dims[i];
            let w = (0..d).map(|j| num(6 + j)).collect::<Result<Vec<_>>>()?;
            let u = (0..d).map(|j| num(6 + width + j)).collect::<Result<Vec<_>>>()?;
            if i == 0 {
                self.welfare.push(num(3)?);
                du2.clear();
                dw2.clear();
                strategies.clear();
                utilities.clear();
            }
            du2.push(num(4)?);
            dw2.push(num(5)?);
            strategies.push(w);
            utilities.push(u);
            if i + 1 == n {
                self.du2_cum.push(std::mem::take(&mut du2));
                self.dw2_cum.push(std::mem::take(&mut dw2));
                self.strategies.push(std::mem::take(&mut strategies));
                self.utilities.push(std::mem::take(&mut utilities));
            }
        }
        if !strategies.is_empty() {
            return Err(Error::Inconsistent("last round is incomplete".into()));
        }
        Ok(self)
    }
}

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Inconsistent(format!("csv: {other:?}")),
    }
}

/// A running simulation; players that need the opponents' current play are
/// scheduled after everyone else, in index order.
pub struct Simulation<'g> {
    game: &'g NormalFormGame,
    players: Vec<Box<dyn OnlineLearner>>,
    mode: FeedbackMode,
    trace: Trace,
}

impl<'g> Simulation<'g> {
    pub fn new(game: &'g NormalFormGame, players: Vec<Box<dyn OnlineLearner>>, mode: FeedbackMode) -> Result<Self> {
        if players.len() != game.players() {
            return Err(Error::PlayerCount {
                expected: game.players(),
                got: players.len(),
            });
        }
        for (i, (p, &d)) in players.iter().zip(game.dims()).enumerate() {
            if p.dim() != d {
                return Err(Error::Dimension {
                    player: i,
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        let mut trace = Trace::empty(
            game.label(),
            game.dims().to_vec(),
            game.scale(),
            mode,
            players.iter().map(|p| p.info()).collect(),
        );
        trace.auction = game.as_auction().map(|a| a.spec().clone());
        Ok(Simulation {
            game,
            players,
            mode,
            trace,
        })
    }

    pub fn from_specs(game: &'g NormalFormGame, specs: &[PlayerSpec], mode: FeedbackMode) -> Result<Self> {
        if specs.len() != game.players() {
            return Err(Error::PlayerCount {
                expected: game.players(),
                got: specs.len(),
            });
        }
        let players = specs
            .iter()
            .zip(game.dims())
            .map(|(s, &d)| s.build(d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(game, players, mode)
    }

    fn feedback(&self, i: usize, profile: &MixedProfile) -> Result<UtilityVector> {
        let v = self.game.expected_utilities(i, profile)?;
        Ok(match self.mode {
            FeedbackMode::Utility => v,
            FeedbackMode::Cost => UtilityVector::from_vec_unchecked(v.values().iter().map(|c| 1.0 - c).collect()),
        })
    }

    pub fn step(&mut self) -> Result<()> {
        let n = self.players.len();
        let mut plays: Vec<Option<MixedStrategy>> = vec![None; n];
        for (i, p) in self.players.iter_mut().enumerate() {
            if !p.needs_opponent_view() {
                plays[i] = Some(p.play()?);
            }
        }
        for i in 0..n {
            if plays[i].is_some() {
                continue;
            }
            let view = MixedProfile::new(
                plays
                    .iter()
                    .zip(self.game.dims())
                    .map(|(w, &d)| w.clone().unwrap_or_else(|| MixedStrategy::uniform(d)))
                    .collect(),
            );
            let u = self.feedback(i, &view)?;
            plays[i] = Some(self.players[i].play_against(&u)?);
        }
        let profile = MixedProfile::new(plays.into_iter().map(|w| w.expect("every player moved")).collect());
        let mut utilities = Vec::with_capacity(n);
        for i in 0..n {
            let u = self.feedback(i, &profile)?;
            self.players[i].observe(&u)?;
            utilities.push(u.into_vec());
        }
        self.trace.welfare.push(self.game.welfare(&profile)?);
        self.trace.du2_cum.push(self.players.iter().map(|p| p.variation().sum_du2).collect());
        self.trace.dw2_cum.push(self.players.iter().map(|p| p.variation().sum_dw2).collect());
        self.trace.strategies.push(profile.strategies().iter().map(|w| w.probs().to_vec()).collect());
        self.trace.utilities.push(utilities);
        Ok(())
    }

    pub fn run(&mut self, rounds: usize) -> Result<()> {
        for _ in 0..rounds {
            self.step()?;
        }
        Ok(())
    }

    pub fn players(&self) -> &[Box<dyn OnlineLearner>] {
        &self.players
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(mut self) -> Trace {
        self.trace.learners = self.players.iter().map(|p| p.info()).collect();
        self.trace
    }
}

/// Runs `rounds` rounds of utility-mode play.
pub fn run(game: &NormalFormGame, players: Vec<Box<dyn OnlineLearner>>, rounds: usize) -> Result<Trace> {
    run_mode(game, players, rounds, FeedbackMode::Utility)
}

pub fn run_mode(
    game: &NormalFormGame,
    players: Vec<Box<dyn OnlineLearner>>,
    rounds: usize,
    mode: FeedbackMode,
) -> Result<Trace> {
    if rounds == 0 {
        return Err(Error::param("rounds", "T must be at least 1"));
    }
    let mut sim = Simulation::new(game, players, mode)?;
    sim.run(rounds)?;
    Ok(sim.into_trace())
}

/// Everyone runs the same spec.
pub fn self_play(game: &NormalFormGame, spec: &PlayerSpec, rounds: usize) -> Result<Trace> {
    let specs = vec![spec.clone(); game.players()];
    let mut sim = Simulation::from_specs(game, &specs, FeedbackMode::Utility)?;
    if rounds == 0 {
        return Err(Error::param("rounds", "T must be at least 1"));
    }
    sim.run(rounds)?;
    Ok(sim.into_trace())
}

/// `max_x sum_t u_x^t - sum_t <w^t, u^t>` in normalized units.
pub fn regret(trace: &Trace, i: usize) -> f64 {
    regret_series(trace, i).last().copied().unwrap_or(0.0)
}

/// Regret after each prefix `1..=t`.
pub fn regret_series(trace: &Trace, i: usize) -> Vec<f64> {
    let d = trace.dims[i];
    let mut cumulative = vec![0.0; d];
    let mut realized = 0.0;
    let mut out = Vec::with_capacity(trace.rounds());
    for t in 0..trace.rounds() {
        let u = &trace.utilities[t][i];
        let w = &trace.strategies[t][i];
        realized += w.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        for (c, x) in cumulative.iter_mut().zip(u) {
            *c += x;
        }
        out.push(cumulative.iter().copied().fold(f64::NEG_INFINITY, f64::max) - realized);
    }
    out
}

pub fn regrets(trace: &Trace) -> Vec<f64> {
    (0..trace.players()).map(|i| regret(trace, i)).collect()
}

/// `max_i r_i(T) / T`: the time-averaged play is an epsilon-CCE with this epsilon.
pub fn cce_gap(trace: &Trace) -> f64 {
    let t = trace.rounds().max(1) as f64;
    regrets(trace).into_iter().fold(f64::NEG_INFINITY, f64::max) / t
}

/// `(sum ||du||_inf^2, sum ||dw||_1^2)` for player `i`.
pub fn rvu_terms(trace: &Trace, i: usize) -> (f64, f64) {
    path_lengths(&trace.utilities_of(i), &trace.plays_of(i), NormPair::L1LInf)
}

/// Rounds `t >= 2` where `||u_i^t - u_i^{t-1}||_inf > sum_{j != i} ||w_j^t - w_j^{t-1}||_1`.
pub fn coupling_violations(trace: &Trace, tol: f64) -> usize {
    let mut bad = 0;
    for t in 1..trace.rounds() {
        let steps: Vec<f64> = (0..trace.players())
            .map(|j| NormPair::L1LInf.primal_dist(&trace.strategies[t][j], &trace.strategies[t - 1][j]))
            .collect();
        let total: f64 = steps.iter().sum();
        for i in 0..trace.players() {
            let du = NormPair::L1LInf.dual_dist(&trace.utilities[t][i], &trace.utilities[t - 1][i]);
            if du > total - steps[i] + tol {
                bad += 1;
            }
        }
    }
    bad
}

pub fn average_welfare(trace: &Trace) -> f64 {
    trace.welfare.iter().sum::<f64>() / trace.rounds().max(1) as f64
}

/// Optional claims the report can certify against.
#[derive(Debug, Clone, Default)]
pub struct ReportContext {
    pub smoothness: Option<SmoothnessCertificate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub rounds: usize,
    pub regrets: Vec<f64>,
    pub raw_regrets: Vec<f64>,
    pub sum_regret: f64,
    pub max_regret: f64,
    pub cce_gap: f64,
    pub average_welfare: f64,
    pub certificates: Vec<Certificate>,
}

impl RegretReport {
    pub fn certificate(&self, name: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.name == name)
    }

    pub fn any_failed(&self) -> bool {
        self.certificates.iter().any(Certificate::failed)
    }
}

fn regularized(info: &LearnerInfo) -> Option<&LearnerSpec> {
    match &info.family {
        Family::Regularized(s) => Some(s),
        _ => None,
    }
}

pub fn report(trace: &Trace, context: &ReportContext) -> Result<RegretReport> {
    let n = trace.players();
    let rounds = trace.rounds();
    if trace.learners.len() != n {
        return Err(Error::Inconsistent("trace metadata lists a different number of learners".into()));
    }
    let series: Vec<Vec<f64>> = (0..n).map(|i| regret_series(trace, i)).collect();
    let regrets: Vec<f64> = series.iter().map(|s| s.last().copied().unwrap_or(0.0)).collect();
    let raw_regrets: Vec<f64> = regrets.iter().map(|r| r * trace.scale.scale).collect();
    let mut certs = Vec::new();

    certs.push(welfare_certificate(trace, context, &raw_regrets)?);
    certs.push(sum_regret_certificate(trace, &series));
    certs.extend(individual_certificates(trace, &regrets));
    for i in 0..n {
        certs.extend(player_certificates(trace, i, regrets[i]));
    }

    Ok(RegretReport {
        rounds,
        sum_regret: regrets.iter().sum(),
        max_regret: regrets.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        cce_gap: cce_gap(trace),
        average_welfare: average_welfare(trace),
        regrets,
        raw_regrets,
        certificates: certs,
    })
}

/// Average welfare against the price-of-anarchy bound.
fn welfare_certificate(trace: &Trace, context: &ReportContext, raw_regrets: &[f64]) -> Result<Certificate> {
    const NAME: &str = "welfare-poa";
    let Some(s) = &context.smoothness else {
        return Ok(Certificate::not_applicable(NAME, "no smoothness certificate supplied"));
    };
    if trace.mode == FeedbackMode::Cost {
        return Ok(Certificate::not_applicable(NAME, "cost games use the first-order welfare bound"));
    }
    if s.s_star.len() != trace.players() {
        return Err(Error::Inconsistent("smoothness certificate is for a different game".into()));
    }
    if !s.verified {
        return Ok(Certificate::not_applicable(NAME, "smoothness was not verified"));
    }
    let bound = poa_welfare_bound(s.lambda, s.mu, s.opt, raw_regrets, trace.rounds())?;
    Ok(Certificate::check(NAME, bound, average_welfare(trace)))
}

/// Sum of regrets over every prefix against `sum_i alpha_i`.
fn sum_regret_certificate(trace: &Trace, series: &[Vec<f64>]) -> Certificate {
    const NAME: &str = "sum-regret-constant";
    let n = trace.players();
    let mut alpha_total = 0.0;
    for (i, info) in trace.learners.iter().enumerate() {
        match info.rvu {
            Some(p) if p.supports_sum_bound(n, trace.dims[i]) => alpha_total += p.alpha,
            Some(_) => {
                return Certificate::not_applicable(NAME, format!("player {i}: beta exceeds gamma/(n-1)^2"));
            }
            None => return Certificate::not_applicable(NAME, format!("player {i} ({}) has no RVU constants", info.label)),
        }
    }
    let worst = (0..trace.rounds())
        .map(|t| series.iter().map(|s| s[t]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Certificate::check(NAME, worst, alpha_total)
}

/// Individual bounds that need every opponent to be stable: the generic
/// `alpha + beta kappa^2 (n-1)^2 T` form and the tuned `T^{1/4}` rate.
fn individual_certificates(trace: &Trace, regrets: &[f64]) -> Vec<Certificate> {
    let n = trace.players();
    let t = trace.rounds() as f64;
    let k = (n.max(2) - 1) as f64;
    let kappas: Vec<Option<f64>> = trace.learners.iter().map(LearnerInfo::stability_kappa).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let name = format!("individual-regret[{i}]");
        let others: Option<Vec<f64>> = (0..n).filter(|&j| j != i).map(|j| kappas[j]).collect();
        match (trace.learners[i].rvu, others) {
            (Some(p), Some(ks)) if !ks.is_empty() => {
                let kappa = ks.into_iter().fold(0.0, f64::max);
                out.push(Certificate::check(name, regrets[i], p.alpha + p.beta * kappa * kappa * k * k * t));
            }
            _ => out.push(Certificate::not_applicable(name, "needs RVU constants and stable opponents")),
        }
    }

    let tuned = (n - 1) as f64;
    let eta_target = tuned.powf(-0.5) * t.powf(-0.25);
    let all_tuned = n >= 2
        && trace.learners.iter().all(|info| {
            regularized(info).is_some_and(|s| {
                s.algorithm == Algorithm::Oftrl
                    && s.predictor == Predictor::LastUtility
                    && s.regularizer == Regularizer::NegativeEntropy
                    && (s.eta - eta_target).abs() <= 1e-12 * eta_target
            })
        });
    for i in 0..n {
        let name = format!("tuned-individual-regret[{i}]");
        if all_tuned {
            let r = (trace.dims[i] as f64).ln();
            out.push(Certificate::check(name, regrets[i], (r + 4.0) * tuned.sqrt() * t.powf(0.25)));
        } else {
            out.push(Certificate::not_applicable(name, "requires all-OFTRL play at eta = (n-1)^(-1/2) T^(-1/4)"));
        }
    }
    out
}

fn player_certificates(trace: &Trace, i: usize, regret: f64) -> Vec<Certificate> {
    let info = &trace.learners[i];
    let mut out = Vec::new();
    if let Some(p) = info.rvu {
        let c = certify_rvu_best_vertex(&trace.utilities_of(i), &trace.plays_of(i), &p)
            .expect("trace sequences have equal length");
        out.push(c.to_certificate(format!("rvu[{i}]")));
    }
    if let (Some(kappa), Some(spec)) = (info.stability_kappa(), regularized(info)) {
        let s = certify_stability(&trace.plays_of(i), spec.eta);
        out.push(Certificate::check(format!("stability[{i}]"), s.max_step, kappa));
    }
    if let Family::Doubling {
        inner,
        alpha,
        beta,
        gamma,
        eta_star,
    } = &info.family
    {
        let (du, dw) = path_lengths(&trace.utilities_of(i), &trace.plays_of(i), inner.regularizer.norm_pair());
        let (by_variation, by_sqrt) = certify_wrapper_bounds(regret, du, dw, trace.rounds(), *alpha, *beta, *gamma, *eta_star);
        out.push(Certificate { name: format!("{}[{i}]", by_variation.name), ..by_variation });
        out.push(Certificate { name: format!("{}[{i}]", by_sqrt.name), ..by_sqrt });
    }
    out
}
