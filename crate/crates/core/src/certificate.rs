use std::fmt;

use crate::game::CERT_TOL;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The hypotheses of the claim do not hold on this input.
    NotApplicable(String),
}

/// One inequality `lhs <= rhs` checked against a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: Verdict,
}

impl Certificate {
    pub fn check(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::check_tol(name, lhs, rhs, CERT_TOL)
    }

    pub fn check_tol(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let verdict = if lhs <= rhs + tol { Verdict::Pass } else { Verdict::Fail };
        Certificate {
            name: name.into(),
            lhs,
            rhs,
            verdict,
        }
    }

    pub fn not_applicable(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Certificate {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            verdict: Verdict::NotApplicable(reason.into()),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn status(&self) -> &'static str {
        match self.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable(_) => "n/a",
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verdict {
            Verdict::NotApplicable(why) => write!(f, "{}: n/a ({why})", self.name),
            _ => write!(f, "{}: {} ({} <= {})", self.name, self.status(), self.lhs, self.rhs),
        }
    }
}
