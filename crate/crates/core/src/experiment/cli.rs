//! Command-line entry point. Exit codes: 0 success, 1 usage or config
//! error, 2 a certificate failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::certificate::Certificate;
use crate::library::lower_bound_experiment;

use super::{bids_figure, check_smoothness, evaluate, load_config, load_trace, output_root, regret_figure, run_experiment, write_report_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CERTIFICATE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "regret-dynamics", version, about = "Learning dynamics in games with regret certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every arm of an experiment config.
    Simulate {
        config: PathBuf,
        /// Output root; overrides the environment variable.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the report of a trace CSV (needs its .meta sidecar).
    Report { trace: PathBuf },
    /// Hedge against a best responder on the two lower-bound matrices.
    Lowerbound {
        #[arg(long)]
        eta: f64,
        #[arg(long = "T")]
        rounds: usize,
    },
    /// Check the smoothness claim of a config by brute force.
    VerifySmooth { config: PathBuf },
    /// Render an SVG from a trace CSV.
    Plot {
        trace: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long, default_value_t = 0)]
        player: usize,
        #[arg(long, default_value_t = 0)]
        item: usize,
        /// Defaults to `<trace stem>_<kind>.svg` next to the trace.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PlotKind {
    Regret,
    Bids,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn status_code(failed: bool) -> i32 {
    if failed {
        EXIT_CERTIFICATE
    } else {
        EXIT_OK
    }
}

fn print_failures(err: &mut dyn Write, prefix: &str, certs: &[Certificate]) -> std::io::Result<()> {
    for c in certs.iter().filter(|c| c.failed()) {
        writeln!(err, "{prefix}certificate failed: {c}")?;
    }
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Simulate { config, out: root } => {
            let spec = match load_config(&config) {
                Ok(s) => s,
                Err(errors) => {
                    writeln!(err, "{}: invalid config", config.display())?;
                    writeln!(err, "{errors}")?;
                    return Ok(EXIT_USAGE);
                }
            };
            let root = root.unwrap_or_else(output_root);
            let outcome = run_experiment(&spec, &root)?;
            for arm in &outcome.arms {
                let r = &arm.report;
                writeln!(
                    out,
                    "{}: T={} sum_regret={:.6} max_regret={:.6} cce_gap={:.6} avg_welfare={:.6}",
                    arm.name, r.rounds, r.sum_regret, r.max_regret, r.cce_gap, r.average_welfare
                )?;
                print_failures(err, &format!("{}: ", arm.name), &r.certificates)?;
            }
            for f in &outcome.files {
                writeln!(out, "wrote {}", f.display())?;
            }
            Ok(status_code(outcome.any_failed()))
        }
        Command::Report { trace } => {
            let (t, meta) = load_trace(&trace)?;
            let r = evaluate(&t, meta.smoothness.as_ref())?;
            write_report_csv(&r, &mut *out)?;
            print_failures(err, "", &r.certificates)?;
            Ok(status_code(r.any_failed()))
        }
        Command::Lowerbound { eta, rounds } => {
            let r = lower_bound_experiment(eta, rounds)?;
            writeln!(out, "eta = {}", r.eta)?;
            writeln!(out, "T = {}", r.rounds)?;
            writeln!(out, "r(T) on A = {}", r.r_game_a)?;
            writeln!(out, "(T/4)(e^eta-1)/(e^eta+1) = {}", r.alternating_form_a)?;
            writeln!(out, "(T/2)(e^eta-1)/(e^eta+1) = {}", r.closed_form_a)?;
            writeln!(out, "r'(T) on A' = {}", r.r_game_a_prime)?;
            writeln!(out, "lower bound on r'(T) = {}", r.closed_form_a_prime_lb)?;
            writeln!(out, "max(r, r') = {}", r.max_regret())?;
            writeln!(out, "sqrt(T(1-1/e)/(e+1)) - 1 = {}", r.sqrt_floor)?;
            let c = Certificate::check("lower-bound", r.sqrt_floor, r.max_regret());
            writeln!(out, "{c}")?;
            Ok(status_code(c.failed()))
        }
        Command::VerifySmooth { config } => {
            let spec = match load_config(&config) {
                Ok(s) => s,
                Err(errors) => {
                    writeln!(err, "{}: invalid config\n{errors}", config.display())?;
                    return Ok(EXIT_USAGE);
                }
            };
            let game = spec.game.build()?;
            let Some(s) = check_smoothness(&spec, &game)? else {
                writeln!(err, "{}: the config makes no smoothness claim", config.display())?;
                return Ok(EXIT_USAGE);
            };
            writeln!(out, "game = {}", game.label())?;
            writeln!(out, "lambda = {}", s.lambda)?;
            writeln!(out, "mu = {}", s.mu)?;
            writeln!(out, "s_star = {:?}", s.s_star)?;
            writeln!(out, "opt = {}", s.opt)?;
            writeln!(out, "slack = {}", s.slack)?;
            writeln!(out, "worst_profile = {:?}", s.worst_profile)?;
            writeln!(out, "verified = {}", s.verified)?;
            Ok(status_code(!s.verified))
        }
        Command::Plot {
            trace,
            kind,
            player,
            item,
            out: target,
        } => {
            let (t, _) = load_trace(&trace)?;
            let stem = trace.file_stem().map_or("trace".into(), |s| s.to_string_lossy().into_owned());
            let pair = [(stem.as_str(), &t)];
            let (svg, suffix) = match kind {
                PlotKind::Regret => (regret_figure(&pair), "regret"),
                PlotKind::Bids => (bids_figure(&pair, player, item)?, "bids"),
            };
            let target = target.unwrap_or_else(|| sibling(&trace, &format!("{stem}_{suffix}.svg")));
            std::fs::write(&target, svg)?;
            writeln!(out, "wrote {}", target.display())?;
            Ok(EXIT_OK)
        }
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map_or_else(|| PathBuf::from(name), |p| p.join(name))
}
