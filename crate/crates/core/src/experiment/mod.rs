//! Config-driven experiments: run every arm of a config, write traces,
//! reports and figures, and re-derive reports from traces.

pub mod cli;
pub mod config;
pub mod meta;
pub mod plot;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::certificate::{Certificate, Verdict};
use crate::cost::{best_cost_smoothness, certify_first_order_welfare, first_order_samples, fit_first_order_constants, verify_cost_smoothness};
use crate::dynamics::{csv_err, fmt_f64, regret_series, report, FeedbackMode, PlayerSpec, RegretReport, ReportContext, Simulation, Trace};
use crate::error::{Error, Result};
use crate::game::{NormalFormGame, SmoothnessCertificate};
use crate::library::best_smoothness;

pub use config::{parse_config, ConfigError, ConfigErrors, ExperimentSpec, GameSpec, SmoothnessClaim};
pub use meta::{load_trace, meta_path, TraceMeta};
use plot::{render_svg, Panel, Series};

/// Directory under which `[output] dir` is created; defaults to `out`.
pub const OUTPUT_ROOT_ENV: &str = "REGRET_DYNAMICS_OUT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

/// Reads and parses a config file; game file paths resolve next to it.
pub fn load_config(path: &Path) -> std::result::Result<ExperimentSpec, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigErrors(vec![ConfigError {
            line: None,
            key: path.display().to_string(),
            message: e.to_string(),
        }])
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Checks the config's smoothness claim, in cost form when the run is in cost mode.
pub fn check_smoothness(spec: &ExperimentSpec, game: &NormalFormGame) -> Result<Option<SmoothnessCertificate>> {
    let cost = spec.mode == FeedbackMode::Cost;
    Ok(match &spec.smoothness {
        SmoothnessClaim::None => None,
        SmoothnessClaim::Given { lambda, mu, s_star } if cost => {
            Some(verify_cost_smoothness(game, *lambda, *mu, s_star, spec.cap)?)
        }
        SmoothnessClaim::Given { lambda, mu, s_star } => Some(game.verify_smoothness(*lambda, *mu, s_star, spec.cap)?),
        SmoothnessClaim::Search { mu } if cost => Some(best_cost_smoothness(game, *mu, spec.cap)?),
        SmoothnessClaim::Search { mu } => Some(best_smoothness(game, *mu, spec.cap)?),
    })
}

fn smoothness_certificate(s: &SmoothnessCertificate) -> Certificate {
    Certificate {
        name: "smoothness".into(),
        lhs: -s.slack,
        rhs: 0.0,
        verdict: if s.verified { Verdict::Pass } else { Verdict::Fail },
    }
}

/// The trace report plus the claim-dependent certificates.
pub fn evaluate(trace: &Trace, smoothness: Option<&SmoothnessCertificate>) -> Result<RegretReport> {
    let ctx = ReportContext {
        smoothness: smoothness.cloned(),
    };
    let mut r = report(trace, &ctx)?;
    if let Some(s) = smoothness {
        r.certificates.insert(0, smoothness_certificate(s));
        if trace.mode == FeedbackMode::Cost {
            let constants = fit_first_order_constants(&first_order_samples(trace));
            r.certificates.push(certify_first_order_welfare(trace, s, constants)?);
        }
    }
    Ok(r)
}

/// `name,value,bound,status,note`: metrics first, then one row per certificate.
pub fn write_report_csv<W: Write>(r: &RegretReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "value", "bound", "status", "note"]).map_err(csv_err)?;
    let mut metric = |name: String, v: f64| w.write_record([name, fmt_f64(v), String::new(), String::new(), String::new()]);
    metric("rounds".into(), r.rounds as f64).map_err(csv_err)?;
    for (i, x) in r.regrets.iter().enumerate() {
        metric(format!("regret[{i}]"), *x).map_err(csv_err)?;
    }
    for (i, x) in r.raw_regrets.iter().enumerate() {
        metric(format!("raw_regret[{i}]"), *x).map_err(csv_err)?;
    }
    metric("sum_regret".into(), r.sum_regret).map_err(csv_err)?;
    metric("max_regret".into(), r.max_regret).map_err(csv_err)?;
    metric("cce_gap".into(), r.cce_gap).map_err(csv_err)?;
    metric("average_welfare".into(), r.average_welfare).map_err(csv_err)?;
    for c in &r.certificates {
        let note = match &c.verdict {
            Verdict::NotApplicable(why) => why.clone(),
            _ => String::new(),
        };
        w.write_record([c.name.clone(), fmt_f64(c.lhs), fmt_f64(c.rhs), c.status().to_string(), note])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidPoint {
    /// `sum_b w_(item, b)`
    pub prob_on_item: f64,
    /// `sum_b b w_(item, b) / prob_on_item`, or 0 when the item is never chosen.
    pub conditional_bid: f64,
}

pub fn bid_trajectory(trace: &Trace, player: usize, item: usize) -> Result<Vec<BidPoint>> {
    let a = trace
        .auction
        .as_ref()
        .ok_or_else(|| Error::Inconsistent(format!("{} is not an auction trace", trace.game_label)))?;
    if player >= a.n {
        return Err(Error::param("player", format!("only {} bidders", a.n)));
    }
    if item >= a.m {
        return Err(Error::param("item", format!("only {} items", a.m)));
    }
    let k = a.bid_levels.len();
    Ok(trace
        .strategies
        .iter()
        .map(|round| {
            let w = &round[player][item * k..(item + 1) * k];
            let prob: f64 = w.iter().sum();
            let mass: f64 = w.iter().zip(&a.bid_levels).map(|(p, b)| p * b).sum();
            BidPoint {
                prob_on_item: prob,
                conditional_bid: if prob > 0.0 { mass / prob } else { 0.0 },
            }
        })
        .collect())
}

/// Mean `|x_t - x_{t-1}|` over consecutive rounds.
pub fn mean_abs_change(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    xs.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (xs.len() - 1) as f64
}

/// Expected raw utility of `player` in every round.
pub fn realized_raw_utility(trace: &Trace, player: usize) -> Vec<f64> {
    (0..trace.rounds())
        .map(|t| {
            let w = &trace.strategies[t][player];
            let u = &trace.utilities[t][player];
            trace.scale.to_raw(w.iter().zip(u).map(|(a, b)| a * b).sum())
        })
        .collect()
}

fn indexed(ys: impl IntoIterator<Item = f64>) -> Vec<(f64, f64)> {
    ys.into_iter().enumerate().map(|(t, y)| ((t + 1) as f64, y)).collect()
}

/// Maximum individual regret and sum of regrets against `t`, one series per arm.
pub fn regret_figure(arms: &[(&str, &Trace)]) -> String {
    let mut max_panel = Panel {
        title: "max individual regret".into(),
        series: Vec::new(),
    };
    let mut sum_panel = Panel {
        title: "sum of regrets".into(),
        series: Vec::new(),
    };
    for &(name, trace) in arms {
        let series: Vec<Vec<f64>> = (0..trace.players()).map(|i| regret_series(trace, i)).collect();
        let at = |t: usize| series.iter().map(move |s| s[t]);
        max_panel.series.push(Series {
            label: name.into(),
            points: indexed((0..trace.rounds()).map(|t| at(t).fold(f64::NEG_INFINITY, f64::max))),
        });
        sum_panel.series.push(Series {
            label: name.into(),
            points: indexed((0..trace.rounds()).map(|t| at(t).sum())),
        });
    }
    render_svg("regret", &[max_panel, sum_panel])
}

/// Expected bid, item probability and per-round utility of one bidder.
pub fn bids_figure(arms: &[(&str, &Trace)], player: usize, item: usize) -> Result<String> {
    let mut panels = [
        format!("conditional expected bid on item {item}"),
        format!("probability of bidding on item {item}"),
        "per-round utility".to_string(),
    ]
    .map(|title| Panel {
        title,
        series: Vec::new(),
    });
    for &(name, trace) in arms {
        let traj = bid_trajectory(trace, player, item)?;
        panels[0].series.push(Series {
            label: name.into(),
            points: indexed(traj.iter().map(|p| p.conditional_bid)),
        });
        panels[1].series.push(Series {
            label: name.into(),
            points: indexed(traj.iter().map(|p| p.prob_on_item)),
        });
        panels[2].series.push(Series {
            label: name.into(),
            points: indexed(realized_raw_utility(trace, player)),
        });
    }
    Ok(render_svg(&format!("bidder {player}"), &panels))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ArmOutcome {
    pub name: String,
    pub players: Vec<PlayerSpec>,
    pub trace: Trace,
    pub report: RegretReport,
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub smoothness: Option<SmoothnessCertificate>,
    pub arms: Vec<ArmOutcome>,
    /// Every file written, in order.
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn any_failed(&self) -> bool {
        self.arms.iter().any(|a| a.report.any_failed())
    }

    pub fn arm(&self, name: &str) -> Option<&ArmOutcome> {
        self.arms.iter().find(|a| a.name == name)
    }
}

/// Runs every arm and writes `<arm>_trace.csv` (+ `.meta`), `<arm>_report.csv`,
/// `<arm>_bids.csv` for auctions, and `regret.svg` / `bids.svg` under
/// `root/<output dir>`. Certificate failures are reported, not raised.
pub fn run_experiment(spec: &ExperimentSpec, root: &Path) -> Result<RunOutcome> {
    let game = spec.game.build()?;
    let smoothness = check_smoothness(spec, &game)?;
    let dir = root.join(&spec.output.dir);
    std::fs::create_dir_all(&dir)?;
    let mut arms = Vec::new();
    let mut files = Vec::new();
    for arm in &spec.arms {
        let players = spec.resolve_players(arm, game.players())?;
        let mut sim = Simulation::from_specs(&game, &players, spec.mode)?;
        sim.run(spec.rounds)?;
        let trace = sim.into_trace();
        let report = evaluate(&trace, smoothness.as_ref())?;

        let trace_path = dir.join(format!("{}_trace.csv", arm.name));
        write_file(&trace_path, |w| trace.write_csv(w))?;
        let meta_file = meta_path(&trace_path);
        write_file(&meta_file, |w| TraceMeta::new(&trace, players.clone(), smoothness.clone()).write(w))?;
        let report_path = dir.join(format!("{}_report.csv", arm.name));
        write_file(&report_path, |w| write_report_csv(&report, w))?;
        files.extend([trace_path.clone(), meta_file, report_path.clone()]);

        if trace.auction.is_some() {
            let bids = dir.join(format!("{}_bids.csv", arm.name));
            let traj = bid_trajectory(&trace, spec.output.bid_player, spec.output.bid_item)?;
            let util = realized_raw_utility(&trace, spec.output.bid_player);
            write_file(&bids, |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(["t", "prob_on_item", "conditional_bid", "raw_utility"]).map_err(csv_err)?;
                for (t, (p, u)) in traj.iter().zip(&util).enumerate() {
                    c.write_record([(t + 1).to_string(), fmt_f64(p.prob_on_item), fmt_f64(p.conditional_bid), fmt_f64(*u)])
                        .map_err(csv_err)?;
                }
                c.flush()?;
                Ok(())
            })?;
            files.push(bids);
        }
        arms.push(ArmOutcome {
            name: arm.name.clone(),
            players,
            trace,
            report,
            trace_path,
            report_path,
        });
    }

    if spec.output.plots {
        let pairs: Vec<(&str, &Trace)> = arms.iter().map(|a| (a.name.as_str(), &a.trace)).collect();
        let regret_svg = dir.join("regret.svg");
        std::fs::write(&regret_svg, regret_figure(&pairs))?;
        files.push(regret_svg);
        if game.as_auction().is_some() {
            let bids_svg = dir.join("bids.svg");
            std::fs::write(&bids_svg, bids_figure(&pairs, spec.output.bid_player, spec.output.bid_item)?)?;
            files.push(bids_svg);
        }
    }
    Ok(RunOutcome {
        dir,
        smoothness,
        arms,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::LearnerSpec;
    use crate::library::{make_auction, AuctionSpec};
    use crate::dynamics::self_play;

    #[test]
    fn uniform_round_bid_point() {
        let g = make_auction(AuctionSpec::uniform(4, 4, 20.0, 20)).unwrap();
        let t = self_play(&g, &PlayerSpec::Learner(LearnerSpec::hedge(0.1)), 1).unwrap();
        let p = bid_trajectory(&t, 0, 1).unwrap()[0];
        assert!((p.prob_on_item - 0.25).abs() < 1e-12);
        assert!((p.conditional_bid - 10.5).abs() < 1e-12);
    }

    #[test]
    fn point_mass_bid_point() {
        let g = make_auction(AuctionSpec::uniform(2, 4, 20.0, 20)).unwrap();
        let mut t = self_play(&g, &PlayerSpec::Learner(LearnerSpec::hedge(0.1)), 1).unwrap();
        let mut w = vec![0.0; 80];
        w[20 + 6] = 1.0;
        t.strategies[0][0] = w;
        assert_eq!(
            bid_trajectory(&t, 0, 1).unwrap()[0],
            BidPoint {
                prob_on_item: 1.0,
                conditional_bid: 7.0
            }
        );
        assert_eq!(bid_trajectory(&t, 0, 0).unwrap()[0].conditional_bid, 0.0);
        assert!(bid_trajectory(&t, 2, 0).is_err());
    }

    #[test]
    fn non_auction_trace_has_no_bids() {
        let g = crate::library::random_game(&[2, 2], 1).unwrap();
        let t = self_play(&g, &PlayerSpec::Learner(LearnerSpec::hedge(0.1)), 3).unwrap();
        assert!(bid_trajectory(&t, 0, 0).is_err());
    }

    #[test]
    fn oscillation_metric() {
        assert_eq!(mean_abs_change(&[1.0, 3.0, 2.0]), 1.5);
        assert_eq!(mean_abs_change(&[1.0]), 0.0);
    }
}
