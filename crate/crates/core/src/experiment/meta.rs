//! `<trace>.meta` sidecars: what a trace CSV alone does not record.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::dynamics::{fmt_f64, FeedbackMode, PlayerSpec, Trace};
use crate::error::{Error, Result};
use crate::game::{Scale, SmoothnessCertificate};
use crate::learner::{Algorithm, LearnerSpec, Predictor};
use crate::library::AuctionSpec;
use crate::regularizer::Regularizer;

use super::config::{parse_predictor, parse_regularizer};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub game_label: String,
    pub dims: Vec<usize>,
    pub scale: Scale,
    pub mode: FeedbackMode,
    pub players: Vec<PlayerSpec>,
    pub smoothness: Option<SmoothnessCertificate>,
    pub auction: Option<AuctionSpec>,
}

pub fn meta_path(trace_csv: &Path) -> PathBuf {
    let mut s = trace_csv.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn join<T>(xs: &[T], f: impl Fn(&T) -> String) -> String {
    xs.iter().map(f).collect::<Vec<_>>().join(",")
}

fn predictor_text(p: Predictor) -> String {
    match p {
        Predictor::Zero => "zero".into(),
        Predictor::LastUtility => "last".into(),
        Predictor::WindowAverage(h) => format!("window:{h}"),
        Predictor::GeometricDiscount(d) => format!("geometric:{}", fmt_f64(d)),
    }
}

fn learner_text(s: &LearnerSpec) -> String {
    let alg = match s.algorithm {
        Algorithm::Hedge => "hedge",
        Algorithm::Oftrl => "oftrl",
        Algorithm::Omd => "omd",
        Algorithm::BestResponse => "best_response",
    };
    let reg = match s.regularizer {
        Regularizer::NegativeEntropy => "entropy",
        Regularizer::SquaredEuclidean => "euclidean",
    };
    format!(
        "algorithm={alg} regularizer={reg} predictor={} eta={}",
        predictor_text(s.predictor),
        fmt_f64(s.eta)
    )
}

/// One-line `key=value` form of a player spec.
pub fn format_player(p: &PlayerSpec) -> String {
    match p {
        PlayerSpec::Learner(s) => learner_text(s),
        PlayerSpec::Robust { inner, eta_star } => format!("{} eta_star={}", learner_text(inner), fmt_f64(*eta_star)),
        PlayerSpec::FirstOrderHedge => "algorithm=first_order_hedge".into(),
        PlayerSpec::FirstOrderHedgeFixed(eta) => format!("algorithm=first_order_hedge eta={}", fmt_f64(*eta)),
        PlayerSpec::BestResponse => "algorithm=best_response".into(),
    }
}

pub fn parse_player(text: &str) -> std::result::Result<PlayerSpec, String> {
    let mut alg = None;
    let mut reg = Regularizer::NegativeEntropy;
    let mut pred = Predictor::Zero;
    let mut eta = None;
    let mut eta_star = None;
    for tok in text.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| format!("`{tok}` is not key=value"))?;
        let num = || v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        match k {
            "algorithm" => alg = Some(v.to_string()),
            "regularizer" => reg = parse_regularizer(v)?,
            "predictor" => pred = parse_predictor(v)?,
            "eta" => eta = Some(num()?),
            "eta_star" => eta_star = Some(num()?),
            _ => return Err(format!("unknown key `{k}`")),
        }
    }
    let alg = alg.ok_or("missing algorithm")?;
    let algorithm = match alg.as_str() {
        "best_response" => return Ok(PlayerSpec::BestResponse),
        "first_order_hedge" => {
            return Ok(eta.map_or(PlayerSpec::FirstOrderHedge, PlayerSpec::FirstOrderHedgeFixed));
        }
        "hedge" => Algorithm::Hedge,
        "oftrl" => Algorithm::Oftrl,
        "omd" => Algorithm::Omd,
        other => return Err(format!("unknown algorithm `{other}`")),
    };
    let spec = LearnerSpec {
        algorithm,
        regularizer: reg,
        predictor: pred,
        eta: eta.ok_or("missing eta")?,
    };
    Ok(match eta_star {
        Some(eta_star) => PlayerSpec::Robust { inner: spec, eta_star },
        None => PlayerSpec::Learner(spec),
    })
}

impl TraceMeta {
    pub fn new(trace: &Trace, players: Vec<PlayerSpec>, smoothness: Option<SmoothnessCertificate>) -> Self {
        TraceMeta {
            game_label: trace.game_label.clone(),
            dims: trace.dims.clone(),
            scale: trace.scale,
            mode: trace.mode,
            players,
            smoothness,
            auction: trace.auction.clone(),
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "game = {}", self.game_label)?;
        writeln!(out, "dims = {}", join(&self.dims, usize::to_string))?;
        writeln!(out, "scale = {} {}", fmt_f64(self.scale.offset), fmt_f64(self.scale.scale))?;
        let mode = match self.mode {
            FeedbackMode::Utility => "utility",
            FeedbackMode::Cost => "cost",
        };
        writeln!(out, "mode = {mode}")?;
        for (i, p) in self.players.iter().enumerate() {
            writeln!(out, "player.{i} = {}", format_player(p))?;
        }
        if let Some(s) = &self.smoothness {
            writeln!(
                out,
                "smoothness = {} {} {} {} {}",
                fmt_f64(s.lambda),
                fmt_f64(s.mu),
                fmt_f64(s.opt),
                s.verified,
                fmt_f64(s.slack)
            )?;
            writeln!(out, "s_star = {}", join(&s.s_star, usize::to_string))?;
            writeln!(out, "worst_profile = {}", join(&s.worst_profile, usize::to_string))?;
        }
        if let Some(a) = &self.auction {
            let rows: Vec<String> = a.values.iter().map(|r| join(r, |x| fmt_f64(*x))).collect();
            writeln!(out, "auction.values = {}", rows.join(";"))?;
            writeln!(out, "auction.bids = {}", join(&a.bid_levels, |x| fmt_f64(*x)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut game_label = None;
        let mut dims: Option<Vec<usize>> = None;
        let mut scale = None;
        let mut mode = None;
        let mut players = Vec::new();
        let mut smooth: Option<(f64, f64, f64, bool, f64)> = None;
        let mut s_star = Vec::new();
        let mut worst = Vec::new();
        let mut values: Option<Vec<Vec<f64>>> = None;
        let mut bids: Option<Vec<f64>> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let bad = |message: String| Error::Parse { line, message };
            if raw.trim().is_empty() {
                continue;
            }
            let (key, value) = raw.split_once('=').ok_or_else(|| bad("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let nums = |s: &str| -> Result<Vec<f64>> {
                s.split([',', ' '])
                    .filter(|x| !x.is_empty())
                    .map(|x| x.parse::<f64>().map_err(|_| bad(format!("`{x}` is not a number"))))
                    .collect()
            };
            let ints = |s: &str| -> Result<Vec<usize>> {
                s.split(',')
                    .filter(|x| !x.is_empty())
                    .map(|x| x.trim().parse::<usize>().map_err(|_| bad(format!("`{x}` is not an index"))))
                    .collect()
            };
            match key {
                "game" => game_label = Some(value.to_string()),
                "dims" => dims = Some(ints(value)?),
                "scale" => match nums(value)?.as_slice() {
                    &[offset, scale_] => scale = Some(Scale { offset, scale: scale_ }),
                    _ => return Err(bad("scale needs offset and factor".into())),
                },
                "mode" => {
                    mode = Some(match value {
                        "utility" => FeedbackMode::Utility,
                        "cost" => FeedbackMode::Cost,
                        _ => return Err(bad(format!("unknown mode `{value}`"))),
                    })
                }
                "smoothness" => {
                    let f: Vec<&str> = value.split_whitespace().collect();
                    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
                    if f.len() != 5 {
                        return Err(bad("smoothness needs lambda mu opt verified slack".into()));
                    }
                    let verified = f[3].parse::<bool>().map_err(|_| bad("verified must be true or false".into()))?;
                    smooth = Some((num(f[0])?, num(f[1])?, num(f[2])?, verified, num(f[4])?));
                }
                "s_star" => s_star = ints(value)?,
                "worst_profile" => worst = ints(value)?,
                "auction.values" => {
                    values = Some(value.split(';').map(nums).collect::<Result<_>>()?);
                }
                "auction.bids" => bids = Some(nums(value)?),
                _ => match key.strip_prefix("player.").map(str::parse::<usize>) {
                    Some(Ok(i)) if i == players.len() => players.push(parse_player(value).map_err(bad)?),
                    _ => return Err(bad(format!("unexpected key `{key}`"))),
                },
            }
        }
        let missing = |what: &str| Error::Inconsistent(format!("trace metadata lacks `{what}`"));
        let dims = dims.ok_or_else(|| missing("dims"))?;
        if players.len() != dims.len() {
            return Err(Error::Inconsistent(format!(
                "trace metadata lists {} players for {} strategy sets",
                players.len(),
                dims.len()
            )));
        }
        let auction = match (values, bids) {
            (Some(values), Some(bid_levels)) => {
                let spec = AuctionSpec {
                    n: values.len(),
                    m: values.first().map_or(0, Vec::len),
                    values,
                    bid_levels,
                };
                spec.validate()?;
                Some(spec)
            }
            (None, None) => None,
            _ => return Err(missing("auction.values or auction.bids")),
        };
        Ok(TraceMeta {
            game_label: game_label.ok_or_else(|| missing("game"))?,
            scale: scale.ok_or_else(|| missing("scale"))?,
            mode: mode.ok_or_else(|| missing("mode"))?,
            smoothness: smooth.map(|(lambda, mu, opt, verified, slack)| SmoothnessCertificate {
                lambda,
                mu,
                s_star,
                opt,
                verified,
                worst_profile: worst,
                slack,
            }),
            dims,
            players,
            auction,
        })
    }

    /// A trace with this metadata and no rounds, ready for `Trace::read_csv`.
    pub fn empty_trace(&self) -> Result<Trace> {
        let learners = self
            .players
            .iter()
            .zip(&self.dims)
            .map(|(p, &d)| Ok(p.build(d)?.info()))
            .collect::<Result<Vec<_>>>()?;
        let mut t = Trace::empty(self.game_label.clone(), self.dims.clone(), self.scale, self.mode, learners);
        t.auction = self.auction.clone();
        Ok(t)
    }
}

/// Reads a trace CSV together with its sidecar.
pub fn load_trace(trace_csv: &Path) -> Result<(Trace, TraceMeta)> {
    let meta_file = meta_path(trace_csv);
    let text = std::fs::read_to_string(&meta_file).map_err(|e| {
        Error::Inconsistent(format!("cannot read {}: {e}", meta_file.display()))
    })?;
    let meta = TraceMeta::parse(&text)?;
    let file = std::fs::File::open(trace_csv)?;
    let trace = meta.empty_trace()?.read_csv(std::io::BufReader::new(file))?;
    Ok((trace, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn player_text_round_trips() {
        let specs = [
            PlayerSpec::Learner(LearnerSpec::hedge(0.1)),
            PlayerSpec::Learner(LearnerSpec::oftrl(Regularizer::SquaredEuclidean, 0.3, Predictor::WindowAverage(5))),
            PlayerSpec::Learner(LearnerSpec::omd(Regularizer::NegativeEntropy, 1.0 / 3.0, Predictor::LastUtility)),
            PlayerSpec::Learner(LearnerSpec::oftrl(Regularizer::NegativeEntropy, 0.05, Predictor::GeometricDiscount(0.9))),
            PlayerSpec::Robust {
                inner: LearnerSpec::optimistic_hedge(0.2),
                eta_star: 0.013,
            },
            PlayerSpec::FirstOrderHedge,
            PlayerSpec::FirstOrderHedgeFixed(0.7),
            PlayerSpec::BestResponse,
        ];
        for s in specs {
            assert_eq!(parse_player(&format_player(&s)), Ok(s));
        }
        assert!(parse_player("algorithm=oftrl").is_err());
        assert!(parse_player("eta=0.1").is_err());
    }

    #[test]
    fn meta_round_trips() {
        let meta = TraceMeta {
            game_label: "auction-n2-m2".into(),
            dims: vec![6, 6],
            scale: Scale { offset: -1.0, scale: 6.0 },
            mode: FeedbackMode::Utility,
            players: vec![PlayerSpec::Learner(LearnerSpec::hedge(0.1)), PlayerSpec::BestResponse],
            smoothness: Some(SmoothnessCertificate {
                lambda: 0.5,
                mu: 1.0,
                s_star: vec![1, 2],
                opt: 10.0,
                verified: true,
                worst_profile: vec![0, 0],
                slack: 0.25,
            }),
            auction: Some(AuctionSpec::uniform(2, 2, 5.0, 3)),
        };
        let mut buf = Vec::new();
        meta.write(&mut buf).unwrap();
        assert_eq!(TraceMeta::parse(std::str::from_utf8(&buf).unwrap()).unwrap(), meta);
        assert!(matches!(TraceMeta::parse("dims = 2\nbogus = 1\n"), Err(Error::Parse { line: 2, .. })));
    }
}
