//! INI-style experiment configs.
//!
//! ```text
//! [experiment]   name, rounds, seed, mode = utility | cost
//! [game]         type = auction | random | matrix | csv, plus per-type keys
//!                and an optional smoothness claim (lambda, mu, s_star)
//! [learner]      algorithm, regularizer, predictor, eta
//! [arm.NAME]     overrides [learner] keys; one run per arm
//! [player.K]     replaces the learner of player K in every arm
//! [robust]       players = all | i,j,..  eta_star = <x> | sum | individual
//! [output]       dir, plots, bid_player, bid_item
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::dynamics::{FeedbackMode, PlayerSpec};
use crate::error::{Error, Result};
use crate::game::{NormalFormGame, DEFAULT_ENUMERATION_CAP};
use crate::learner::{Algorithm, LearnerSpec, Predictor};
use crate::library::{make_auction, make_matrix_game, random_game, AuctionSpec};
use crate::regularizer::Regularizer;
use crate::robust::{recommended_eta_star, EtaStarMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

/// Every problem found in a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub enum GameSpec {
    Auction(AuctionSpec),
    Random { dims: Vec<usize>, seed: u64 },
    Matrix(Vec<Vec<f64>>),
    /// Dense game file written by `NormalFormGame::write_csv`.
    Csv(PathBuf),
}

impl GameSpec {
    pub fn build(&self) -> Result<NormalFormGame> {
        match self {
            GameSpec::Auction(spec) => make_auction(spec.clone()),
            GameSpec::Random { dims, seed } => random_game(dims, *seed),
            GameSpec::Matrix(a) => make_matrix_game(a.clone()),
            GameSpec::Csv(path) => {
                let file = std::fs::File::open(path)?;
                let label = path.file_stem().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
                Ok(NormalFormGame::from_csv(std::io::BufReader::new(file))?.with_label(label))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SmoothnessClaim {
    None,
    /// Verify this `(lambda, mu, s*)`.
    Given { lambda: f64, mu: f64, s_star: Vec<usize> },
    /// Find the smallest `lambda` at this `mu`.
    Search { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaChoice {
    Fixed(f64),
    /// `(n-1)^{-1/2} T^{-1/4}`.
    Tuned,
}

impl EtaChoice {
    pub fn resolve(self, n: usize, rounds: usize) -> Result<f64> {
        match self {
            EtaChoice::Fixed(x) => Ok(x),
            EtaChoice::Tuned if n >= 2 => Ok(((n - 1) as f64).powf(-0.5) * (rounds as f64).powf(-0.25)),
            EtaChoice::Tuned => Err(Error::param("eta", "tuned step needs at least two players")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerChoice {
    Regularized {
        algorithm: Algorithm,
        regularizer: Regularizer,
        predictor: Predictor,
        eta: EtaChoice,
    },
    BestResponse,
    FirstOrderHedge { eta: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaStarChoice {
    Fixed(f64),
    Mode(EtaStarMode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustSpec {
    /// `None` wraps every regularized player.
    pub players: Option<Vec<usize>>,
    pub eta_star: EtaStarChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    pub name: String,
    pub shared: LearnerChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: String,
    pub plots: bool,
    pub bid_player: usize,
    pub bid_item: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub rounds: usize,
    pub seed: u64,
    pub mode: FeedbackMode,
    pub game: GameSpec,
    pub smoothness: SmoothnessClaim,
    pub cap: u64,
    pub arms: Vec<ArmSpec>,
    pub players: BTreeMap<usize, LearnerChoice>,
    pub robust: Option<RobustSpec>,
    pub output: OutputSpec,
}

impl ExperimentSpec {
    /// Concrete player specs of one arm for a game with `n` players.
    pub fn resolve_players(&self, arm: &ArmSpec, n: usize) -> Result<Vec<PlayerSpec>> {
        if let Some(&k) = self.players.keys().find(|&&k| k >= n) {
            return Err(Error::param("player", format!("player.{k} does not exist in a {n}-player game")));
        }
        let wrap: Vec<bool> = match &self.robust {
            None => vec![false; n],
            Some(RobustSpec { players: None, .. }) => vec![true; n],
            Some(RobustSpec { players: Some(list), .. }) => {
                if let Some(&k) = list.iter().find(|&&k| k >= n) {
                    return Err(Error::param("robust", format!("player {k} does not exist in a {n}-player game")));
                }
                (0..n).map(|i| list.contains(&i)).collect()
            }
        };
        let mut out = Vec::with_capacity(n);
        for (i, &wrapped) in wrap.iter().enumerate() {
            let choice = self.players.get(&i).copied().unwrap_or(arm.shared);
            let spec = match choice {
                LearnerChoice::BestResponse => PlayerSpec::BestResponse,
                LearnerChoice::FirstOrderHedge { eta: None } => PlayerSpec::FirstOrderHedge,
                LearnerChoice::FirstOrderHedge { eta: Some(e) } => PlayerSpec::FirstOrderHedgeFixed(e),
                LearnerChoice::Regularized {
                    algorithm,
                    regularizer,
                    predictor,
                    eta,
                } => {
                    let inner = LearnerSpec {
                        algorithm,
                        regularizer,
                        predictor,
                        eta: eta.resolve(n, self.rounds)?,
                    };
                    match (&self.robust, wrapped) {
                        (Some(r), true) => PlayerSpec::Robust {
                            inner,
                            eta_star: self.eta_star(r.eta_star, inner, n)?,
                        },
                        _ => PlayerSpec::Learner(inner),
                    }
                }
            };
            out.push(spec);
        }
        Ok(out)
    }

    fn eta_star(&self, choice: EtaStarChoice, inner: LearnerSpec, n: usize) -> Result<f64> {
        match choice {
            EtaStarChoice::Fixed(x) => Ok(x),
            EtaStarChoice::Mode(mode) => {
                // Dimension only enters alpha, which the recommendation does not use.
                let (_, beta, gamma) = inner
                    .parametric_constants(2)
                    .ok_or_else(|| Error::param("robust", format!("{} cannot be wrapped", inner.label())))?;
                recommended_eta_star(mode, n, beta, gamma, self.rounds)
            }
        }
    }
}

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

struct Checker {
    errors: Vec<ConfigError>,
}

impl Checker {
    fn push(&mut self, line: Option<usize>, key: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            key: key.into(),
            message: message.into(),
        });
    }

    fn value<T>(
        &mut self,
        sec: Option<&Section>,
        key: &str,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Option<T> {
        let sec = sec?;
        let e = sec.get(key)?;
        match parse(&e.value) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.push(Some(e.line), format!("{}.{key}", sec.name), msg);
                None
            }
        }
    }

    /// Like `value` but records a missing-key error. `Err` means "already reported".
    fn required<T>(
        &mut self,
        sec: Option<&Section>,
        section_name: &str,
        key: &str,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> std::result::Result<T, ()> {
        match sec.and_then(|s| s.get(key)) {
            None => {
                self.push(sec.map(|s| s.line), format!("{section_name}.{key}"), "missing required key");
                Err(())
            }
            Some(_) => self.value(sec, key, parse).ok_or(()),
        }
    }

    fn allow(&mut self, sec: Option<&Section>, keys: &[&str]) {
        let Some(sec) = sec else { return };
        for e in &sec.entries {
            if !keys.contains(&e.key.as_str()) {
                self.push(Some(e.line), format!("{}.{}", sec.name, e.key), "unknown key");
            }
        }
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse().map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

fn parse_positive_usize(s: &str) -> std::result::Result<usize, String> {
    match parse_usize(s)? {
        0 => Err("must be at least 1".into()),
        k => Ok(k),
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a number, got `{s}`"))
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let x = parse_f64(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {x}"))
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    s.split(',').map(|x| item(x.trim())).collect()
}

fn parse_matrix(s: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    s.split(';').map(|row| parse_list(row, parse_f64)).collect()
}

pub(crate) fn parse_predictor(s: &str) -> std::result::Result<Predictor, String> {
    match s.split_once(':') {
        None if s == "zero" => Ok(Predictor::Zero),
        None if s == "last" => Ok(Predictor::LastUtility),
        Some(("window", h)) => match parse_positive_usize(h) {
            Ok(h) => Ok(Predictor::WindowAverage(h)),
            Err(e) => Err(format!("window size: {e}")),
        },
        Some(("geometric", d)) => match parse_f64(d) {
            Ok(d) if d > 0.0 && d < 1.0 => Ok(Predictor::GeometricDiscount(d)),
            _ => Err(format!("geometric discount must lie in (0, 1), got `{d}`")),
        },
        _ => Err(format!("expected zero, last, window:H or geometric:D, got `{s}`")),
    }
}

pub(crate) fn parse_regularizer(s: &str) -> std::result::Result<Regularizer, String> {
    match s {
        "entropy" => Ok(Regularizer::NegativeEntropy),
        "euclidean" => Ok(Regularizer::SquaredEuclidean),
        _ => Err(format!("expected entropy or euclidean, got `{s}`")),
    }
}

const LEARNER_KEYS: &[&str] = &["algorithm", "regularizer", "predictor", "eta"];

/// Learner from the merged keys of up to two sections (later wins).
fn learner_choice(ck: &mut Checker, layers: &[Option<&Section>], name: &str) -> Option<LearnerChoice> {
    let pick = |key: &str| layers.iter().rev().flatten().find(|s| s.get(key).is_some()).copied();
    let Some(alg_sec) = pick("algorithm") else {
        ck.push(layers.iter().rev().flatten().next().map(|s| s.line), format!("{name}.algorithm"), "missing required key");
        return None;
    };
    let algorithm = ck.value(Some(alg_sec), "algorithm", |s| match s {
        "hedge" | "optimistic_hedge" | "oftrl" | "omd" | "best_response" | "first_order_hedge" => Ok(s.to_string()),
        _ => Err(format!(
            "expected hedge, optimistic_hedge, oftrl, omd, best_response or first_order_hedge, got `{s}`"
        )),
    })?;
    let reg = pick("regularizer");
    let pred = pick("predictor");
    let eta_sec = pick("eta");
    let unused = |ck: &mut Checker, sec: Option<&Section>, key: &str| {
        if let Some(s) = sec {
            let line = s.get(key).map(|e| e.line);
            ck.push(line, format!("{}.{key}", s.name), format!("not used by {algorithm}"));
        }
    };
    let eta_required = |ck: &mut Checker| -> Option<EtaChoice> {
        let Some(sec) = eta_sec else {
            ck.push(alg_sec.get("algorithm").map(|e| e.line), format!("{name}.eta"), "missing required key");
            return None;
        };
        ck.value(Some(sec), "eta", |s| {
            if s == "tuned" {
                Ok(EtaChoice::Tuned)
            } else {
                parse_positive(s).map(EtaChoice::Fixed)
            }
        })
    };
    match algorithm.as_str() {
        "best_response" => {
            unused(ck, reg, "regularizer");
            unused(ck, pred, "predictor");
            Some(LearnerChoice::BestResponse)
        }
        "first_order_hedge" => {
            unused(ck, reg, "regularizer");
            unused(ck, pred, "predictor");
            let eta = eta_sec.and_then(|s| ck.value(Some(s), "eta", parse_positive));
            if eta_sec.is_some() && eta.is_none() {
                return None;
            }
            Some(LearnerChoice::FirstOrderHedge { eta })
        }
        "hedge" | "optimistic_hedge" => {
            unused(ck, reg, "regularizer");
            unused(ck, pred, "predictor");
            let eta = eta_required(ck)?;
            let (algorithm, predictor) = if algorithm == "hedge" {
                (Algorithm::Hedge, Predictor::Zero)
            } else {
                (Algorithm::Oftrl, Predictor::LastUtility)
            };
            Some(LearnerChoice::Regularized {
                algorithm,
                regularizer: Regularizer::NegativeEntropy,
                predictor,
                eta,
            })
        }
        _ => {
            let regularizer = match reg {
                Some(s) => ck.value(Some(s), "regularizer", parse_regularizer),
                None => Some(Regularizer::NegativeEntropy),
            };
            let predictor = match pred {
                Some(s) => ck.value(Some(s), "predictor", parse_predictor),
                None => Some(Predictor::LastUtility),
            };
            let eta = eta_required(ck);
            Some(LearnerChoice::Regularized {
                algorithm: if algorithm == "oftrl" { Algorithm::Oftrl } else { Algorithm::Omd },
                regularizer: regularizer?,
                predictor: predictor?,
                eta: eta?,
            })
        }
    }
}

fn split_sections(text: &str, ck: &mut Checker) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.iter().any(|s| s.name == name) {
                ck.push(Some(line), name.clone(), "duplicate section");
            }
            sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            ck.push(Some(line), body.to_string(), "expected `key = value` or `[section]`");
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let Some(sec) = sections.last_mut() else {
            ck.push(Some(line), key, "key outside any section");
            continue;
        };
        if sec.get(&key).is_some() {
            ck.push(Some(line), format!("{}.{key}", sec.name), "duplicate key");
            continue;
        }
        sec.entries.push(Entry { key, value, line });
    }
    sections
}

/// Parses and validates a config. Relative game file paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> std::result::Result<ExperimentSpec, ConfigErrors> {
    let mut ck = Checker { errors: Vec::new() };
    let sections = split_sections(text, &mut ck);
    let find = |name: &str| sections.iter().find(|s| s.name == name);
    for s in &sections {
        let known = matches!(s.name.as_str(), "experiment" | "game" | "learner" | "robust" | "output")
            || s.name.strip_prefix("arm.").is_some_and(|a| !a.is_empty())
            || s.name.strip_prefix("player.").is_some();
        if !known {
            ck.push(Some(s.line), s.name.clone(), "unknown section");
        }
    }

    let exp = find("experiment");
    ck.allow(exp, &["name", "rounds", "seed", "mode"]);
    let name = ck.required(exp, "experiment", "name", |s| {
        if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            Ok(s.to_string())
        } else {
            Err(format!("`{s}` must be a nonempty file-name-safe word"))
        }
    });
    let rounds = ck.required(exp, "experiment", "rounds", parse_positive_usize);
    let seed = ck.value(exp, "seed", |s| s.parse::<u64>().map_err(|_| format!("expected an unsigned integer, got `{s}`")));
    let mode = ck
        .value(exp, "mode", |s| match s {
            "utility" => Ok(FeedbackMode::Utility),
            "cost" => Ok(FeedbackMode::Cost),
            _ => Err(format!("expected utility or cost, got `{s}`")),
        })
        .unwrap_or(FeedbackMode::Utility);
    let seed = seed.unwrap_or(0);

    let game_sec = find("game");
    let game = parse_game(&mut ck, game_sec, seed, base_dir);
    let cap = ck
        .value(game_sec, "cap", |s| s.parse::<u64>().map_err(|_| format!("expected an unsigned integer, got `{s}`")))
        .unwrap_or(DEFAULT_ENUMERATION_CAP);
    let smoothness = parse_smoothness(&mut ck, game_sec);

    let learner = find("learner");
    ck.allow(learner, LEARNER_KEYS);
    let arm_secs: Vec<&Section> = sections.iter().filter(|s| s.name.starts_with("arm.")).collect();
    let mut arms = Vec::new();
    if arm_secs.is_empty() {
        if let Some(shared) = learner_choice(&mut ck, &[learner], "learner") {
            arms.push(ArmSpec {
                name: "main".into(),
                shared,
            });
        }
    } else {
        for a in arm_secs {
            ck.allow(Some(a), LEARNER_KEYS);
            if let Some(shared) = learner_choice(&mut ck, &[learner, Some(a)], &a.name) {
                arms.push(ArmSpec {
                    name: a.name["arm.".len()..].to_string(),
                    shared,
                });
            }
        }
    }

    let mut players = BTreeMap::new();
    for p in sections.iter().filter(|s| s.name.starts_with("player.")) {
        ck.allow(Some(p), LEARNER_KEYS);
        match parse_usize(&p.name["player.".len()..]) {
            Ok(k) => {
                if let Some(c) = learner_choice(&mut ck, &[Some(p)], &p.name) {
                    players.insert(k, c);
                }
            }
            Err(_) => ck.push(Some(p.line), p.name.clone(), "player sections are named player.K with K an index"),
        }
    }

    let robust_sec = find("robust");
    ck.allow(robust_sec, &["players", "eta_star"]);
    let robust = robust_sec.and_then(|sec| {
        let players = ck.value(Some(sec), "players", |s| {
            if s == "all" {
                Ok(None)
            } else {
                parse_list(s, parse_usize).map(Some)
            }
        });
        let eta_star = ck.required(Some(sec), "robust", "eta_star", |s| match s {
            "sum" => Ok(EtaStarChoice::Mode(EtaStarMode::SumRegret)),
            "individual" => Ok(EtaStarChoice::Mode(EtaStarMode::Individual)),
            _ => parse_positive(s).map(EtaStarChoice::Fixed),
        });
        let players = if sec.get("players").is_some() { players? } else { None };
        Some(RobustSpec {
            players,
            eta_star: eta_star.ok()?,
        })
    });

    let out = find("output");
    ck.allow(out, &["dir", "plots", "bid_player", "bid_item"]);
    let dir = ck.value(out, "dir", |s| {
        if s.is_empty() || Path::new(s).is_absolute() || s.split(['/', '\\']).any(|c| c == "..") {
            Err(format!("`{s}` must be a relative path inside the output root"))
        } else {
            Ok(s.to_string())
        }
    });
    let plots = ck.value(out, "plots", parse_bool).unwrap_or(true);
    let bid_player = ck.value(out, "bid_player", parse_usize).unwrap_or(0);
    let bid_item = ck.value(out, "bid_item", parse_usize).unwrap_or(0);

    if let (Some(GameSpec::Auction(a)), Some(p)) = (&game, out.and_then(|s| s.get("bid_player"))) {
        if bid_player >= a.n {
            ck.push(Some(p.line), "output.bid_player", format!("only {} bidders", a.n));
        }
    }
    if let (Some(GameSpec::Auction(a)), Some(p)) = (&game, out.and_then(|s| s.get("bid_item"))) {
        if bid_item >= a.m {
            ck.push(Some(p.line), "output.bid_item", format!("only {} items", a.m));
        }
    }

    if !ck.errors.is_empty() {
        return Err(ConfigErrors(ck.errors));
    }
    let name = name.expect("reported above");
    Ok(ExperimentSpec {
        output: OutputSpec {
            dir: dir.unwrap_or_else(|| name.clone()),
            plots,
            bid_player,
            bid_item,
        },
        name,
        rounds: rounds.expect("reported above"),
        seed,
        mode,
        game: game.expect("reported above"),
        smoothness: smoothness.expect("reported above"),
        cap,
        arms,
        players,
        robust,
    })
}

fn parse_game(ck: &mut Checker, sec: Option<&Section>, seed: u64, base_dir: &Path) -> Option<GameSpec> {
    const CLAIM: &[&str] = &["type", "lambda", "mu", "s_star", "cap"];
    let kind = ck
        .required(sec, "game", "type", |s| match s {
            "auction" | "random" | "matrix" | "csv" => Ok(s.to_string()),
            _ => Err(format!("expected auction, random, matrix or csv, got `{s}`")),
        })
        .ok()?;
    let keys = |extra: &[&'static str]| -> Vec<&'static str> { CLAIM.iter().chain(extra).copied().collect() };
    match kind.as_str() {
        "auction" => {
            ck.allow(sec, &keys(&["players", "items", "value", "max_bid", "values", "value_seed"]));
            let n = ck.required(sec, "game", "players", parse_positive_usize);
            let m = ck.required(sec, "game", "items", parse_positive_usize);
            let v = ck.required(sec, "game", "value", |s| {
                let x = parse_f64(s)?;
                if x >= 0.0 {
                    Ok(x)
                } else {
                    Err("must be nonnegative".into())
                }
            });
            let max_bid = ck.required(sec, "game", "max_bid", parse_positive_usize);
            let random = ck
                .value(sec, "values", |s| match s {
                    "uniform" => Ok(false),
                    "random" => Ok(true),
                    _ => Err(format!("expected uniform or random, got `{s}`")),
                })
                .unwrap_or(false);
            let value_seed = ck
                .value(sec, "value_seed", |s| s.parse::<u64>().map_err(|_| format!("expected an unsigned integer, got `{s}`")))
                .unwrap_or(seed);
            let (n, m, v, max_bid) = (n.ok()?, m.ok()?, v.ok()?, max_bid.ok()?);
            Some(GameSpec::Auction(if random {
                AuctionSpec::random_subset(n, m, v, max_bid, value_seed)
            } else {
                AuctionSpec::uniform(n, m, v, max_bid)
            }))
        }
        "random" => {
            ck.allow(sec, &keys(&["dims", "game_seed"]));
            let dims = ck.required(sec, "game", "dims", |s| parse_list(s, parse_positive_usize));
            let game_seed = ck
                .value(sec, "game_seed", |s| s.parse::<u64>().map_err(|_| format!("expected an unsigned integer, got `{s}`")))
                .unwrap_or(seed);
            Some(GameSpec::Random {
                dims: dims.ok()?,
                seed: game_seed,
            })
        }
        "matrix" => {
            ck.allow(sec, &keys(&["rows"]));
            let rows = ck.required(sec, "game", "rows", |s| {
                let a = parse_matrix(s)?;
                if a.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err("entries must lie in [0, 1]".into());
                }
                if a.iter().any(|r| r.len() != a[0].len()) {
                    return Err("rows must have equal length".into());
                }
                Ok(a)
            });
            Some(GameSpec::Matrix(rows.ok()?))
        }
        _ => {
            ck.allow(sec, &keys(&["path"]));
            let path = ck.required(sec, "game", "path", |s| Ok(base_dir.join(s)));
            Some(GameSpec::Csv(path.ok()?))
        }
    }
}

fn parse_smoothness(ck: &mut Checker, sec: Option<&Section>) -> Option<SmoothnessClaim> {
    let lambda = ck.value(sec, "lambda", parse_positive);
    let mu = ck.value(sec, "mu", |s| {
        let x = parse_f64(s)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err("must be nonnegative".into())
        }
    });
    let s_star = ck.value(sec, "s_star", |s| parse_list(s, parse_usize));
    let has = |k: &str| sec.and_then(|s| s.get(k)).map(|e| e.line);
    match (has("lambda"), has("mu"), has("s_star")) {
        (None, None, None) => Some(SmoothnessClaim::None),
        (None, Some(_), None) => Some(SmoothnessClaim::Search { mu: mu? }),
        (Some(_), Some(_), Some(_)) => Some(SmoothnessClaim::Given {
            lambda: lambda?,
            mu: mu?,
            s_star: s_star?,
        }),
        (l, m, s) => {
            let line = l.or(m).or(s);
            ck.push(line, "game.lambda", "a smoothness claim needs lambda, mu and s_star (or mu alone to search)");
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> std::result::Result<ExperimentSpec, ConfigErrors> {
        parse_config(text, Path::new("."))
    }

    const MINIMAL: &str = "[experiment]\nname = t\nrounds = 10\n[game]\ntype = random\ndims = 2,2\n[learner]\nalgorithm = optimistic_hedge\neta = 0.1\n";

    #[test]
    fn empty_file_lists_every_missing_key() {
        let errs = parse("").unwrap_err().0;
        let keys: Vec<&str> = errs.iter().map(|e| e.key.as_str()).collect();
        assert_eq!(keys, ["experiment.name", "experiment.rounds", "game.type", "learner.algorithm"]);
    }

    #[test]
    fn negative_eta_is_a_single_error() {
        let text = MINIMAL.replace("eta = 0.1", "eta = -1");
        let errs = parse(&text).unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].key, "learner.eta");
        assert_eq!(errs[0].line, Some(9));
    }

    #[test]
    fn unknown_keys_and_sections() {
        let text = format!("{MINIMAL}colour = red\n[extra]\n");
        let errs = parse(&text).unwrap_err().0;
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().any(|e| e.key == "learner.colour" && e.line == Some(10)));
        assert!(errs.iter().any(|e| e.key == "extra"));
    }

    #[test]
    fn minimal_parses() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.rounds, 10);
        assert_eq!(s.arms.len(), 1);
        assert_eq!(s.output.dir, "t");
        let players = s.resolve_players(&s.arms[0], 2).unwrap();
        assert_eq!(players, vec![PlayerSpec::Learner(LearnerSpec::optimistic_hedge(0.1)); 2]);
    }

    #[test]
    fn arms_inherit_learner_keys() {
        let text = "[experiment]\nname = t\nrounds = 10\n[game]\ntype = random\ndims = 2,2\n[learner]\neta = 0.1\n[arm.h]\nalgorithm = hedge\n[arm.o]\nalgorithm = optimistic_hedge\n[player.1]\nalgorithm = best_response\n";
        let s = parse(text).unwrap();
        let names: Vec<&str> = s.arms.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["h", "o"]);
        let p = s.resolve_players(&s.arms[0], 2).unwrap();
        assert_eq!(p, vec![PlayerSpec::Learner(LearnerSpec::hedge(0.1)), PlayerSpec::BestResponse]);
        assert!(s.resolve_players(&s.arms[0], 1).is_err());
    }

    #[test]
    fn tuned_eta_and_robust() {
        let text = MINIMAL.replace("eta = 0.1", "eta = tuned\n[robust]\neta_star = individual");
        let s = parse(&text).unwrap();
        let p = s.resolve_players(&s.arms[0], 2).unwrap();
        let eta = 10f64.powf(-0.25);
        assert_eq!(
            p[0],
            PlayerSpec::Robust {
                inner: LearnerSpec::optimistic_hedge(eta),
                eta_star: eta,
            }
        );
    }

    #[test]
    fn predictor_syntax() {
        assert_eq!(parse_predictor("window:5"), Ok(Predictor::WindowAverage(5)));
        assert_eq!(parse_predictor("geometric:0.9"), Ok(Predictor::GeometricDiscount(0.9)));
        assert!(parse_predictor("window:0").is_err());
        assert!(parse_predictor("geometric:1").is_err());
    }

    #[test]
    fn partial_smoothness_claim_is_rejected() {
        let text = MINIMAL.replace("dims = 2,2", "dims = 2,2\nlambda = 1");
        let errs = parse(&text).unwrap_err().0;
        assert_eq!(errs[0].key, "game.lambda");
    }
}
