//! Finite normal-form games with exact expected-utility feedback.
//!
//! Utilities are kept in normalized units in `[0, 1]`; a [`Scale`] maps them
//! back to raw units (`raw = offset + scale * normalized`). Learners only ever
//! see normalized values. Welfare, optimal welfare and smoothness slacks are
//! reported in raw units.

use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::library::{Auction, MatrixGame};

/// Default limit on the number of pure profiles any exhaustive scan may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Slack allowed when checking an inequality certificate.
pub const CERT_TOL: f64 = 1e-9;

/// Tolerance on probability vectors summing to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

const UTILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {x} is not a probability")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(MixedStrategy(p))
    }

    pub(crate) fn from_vec_unchecked(p: Vec<f64>) -> Self {
        debug_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        MixedStrategy(p)
    }

    pub fn uniform(d: usize) -> Self {
        MixedStrategy(vec![1.0 / d as f64; d])
    }

    pub fn point(d: usize, k: usize) -> Self {
        let mut p = vec![0.0; d];
        p[k] = 1.0;
        MixedStrategy(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, u: &[f64]) -> f64 {
        self.0.iter().zip(u).map(|(p, x)| p * x).sum()
    }

    /// Probabilities with values below 1e-300 shown as exact zeros.
    pub fn for_reporting(&self) -> Vec<f64> {
        self.0.iter().map(|&p| if p < 1e-300 { 0.0 } else { p }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile(Vec<MixedStrategy>);

impl MixedProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        MixedProfile(strategies)
    }

    pub fn uniform(dims: &[usize]) -> Self {
        MixedProfile(dims.iter().map(|&d| MixedStrategy::uniform(d)).collect())
    }

    /// Point masses on the given pure profile.
    pub fn pure(dims: &[usize], profile: &[usize]) -> Self {
        MixedProfile(
            dims.iter()
                .zip(profile)
                .map(|(&d, &k)| MixedStrategy::point(d, k))
                .collect(),
        )
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.0
    }

    pub fn get(&self, i: usize) -> &MixedStrategy {
        &self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A per-strategy utility vector in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector(Vec<f64>);

impl UtilityVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        for (index, &value) in u.iter().enumerate() {
            if !value.is_finite() || !(-UTILITY_SLACK..=1.0 + UTILITY_SLACK).contains(&value) {
                return Err(Error::UtilityRange { index, value });
            }
        }
        Ok(UtilityVector(u))
    }

    pub(crate) fn from_vec_unchecked(u: Vec<f64>) -> Self {
        UtilityVector(u)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Affine map between normalized and raw units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub offset: f64,
    pub scale: f64,
}

impl Scale {
    pub const UNIT: Scale = Scale {
        offset: 0.0,
        scale: 1.0,
    };

    /// Scale covering raw values in `[lo, hi]`, with `lo` clamped to at most 0.
    pub fn covering(lo: f64, hi: f64) -> Self {
        let offset = lo.min(0.0);
        let span = hi - offset;
        Scale {
            offset,
            scale: if span > 0.0 { span } else { 1.0 },
        }
    }

    pub fn to_raw(&self, x: f64) -> f64 {
        self.offset + self.scale * x
    }

    pub fn to_normalized(&self, raw: f64) -> f64 {
        (raw - self.offset) / self.scale
    }
}

#[derive(Debug, Clone)]
pub struct DenseTensor {
    /// Normalized utilities, `n` entries per pure profile, profiles in
    /// lexicographic order (last player varies fastest).
    utilities: Vec<f64>,
    /// Raw utility of a strategyless participant per profile, if any.
    passive: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub enum Oracle {
    Dense(DenseTensor),
    Auction(Auction),
    MatrixZeroSum(MatrixGame),
}

#[derive(Debug, Clone)]
pub struct NormalFormGame {
    label: String,
    dims: Vec<usize>,
    oracle: Oracle,
    scale: Scale,
}

/// Result of brute-force checking the smoothness inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessCertificate {
    pub lambda: f64,
    pub mu: f64,
    pub s_star: Vec<usize>,
    pub opt: f64,
    pub verified: bool,
    pub worst_profile: Vec<usize>,
    pub slack: f64,
}

impl SmoothnessCertificate {
    /// Price-of-anarchy factor `(1 + mu) / lambda`.
    pub fn poa_factor(&self) -> f64 {
        (1.0 + self.mu) / self.lambda
    }
}

impl NormalFormGame {
    /// Dense game from normalized utilities laid out `n` per pure profile.
    pub fn dense(dims: Vec<usize>, utilities: Vec<f64>, scale: Scale) -> Result<Self> {
        validate_dims(&dims)?;
        let count = profile_count(&dims);
        let n = dims.len();
        if utilities.len() as u128 != count * n as u128 {
            return Err(Error::Inconsistent(format!(
                "dense tensor needs {} entries, got {}",
                count * n as u128,
                utilities.len()
            )));
        }
        if let Err(Error::UtilityRange { index, value }) = UtilityVector::new(utilities.clone()) {
            return Err(Error::UtilityRange { index, value });
        }
        Ok(NormalFormGame {
            label: "dense".into(),
            dims,
            oracle: Oracle::Dense(DenseTensor {
                utilities,
                passive: None,
            }),
            scale,
        })
    }

    /// Dense game from raw utilities; the scale is fitted to the data.
    pub fn from_raw(dims: Vec<usize>, raw: Vec<f64>) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("raw utilities"));
        }
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = Scale::covering(lo.min(0.0), hi.max(0.0));
        let normalized = raw
            .iter()
            .map(|&x| scale.to_normalized(x).clamp(0.0, 1.0))
            .collect();
        Self::dense(dims, normalized, scale)
    }

    pub(crate) fn from_oracle(label: String, dims: Vec<usize>, oracle: Oracle, scale: Scale) -> Self {
        NormalFormGame {
            label,
            dims,
            oracle,
            scale,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn players(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn oracle(&self) -> &Oracle {
        &self.oracle
    }

    pub fn as_auction(&self) -> Option<&Auction> {
        match &self.oracle {
            Oracle::Auction(a) => Some(a),
            _ => None,
        }
    }

    pub fn profile_count(&self) -> u128 {
        profile_count(&self.dims)
    }

    pub fn profile_index(&self, s: &[usize]) -> usize {
        s.iter()
            .zip(&self.dims)
            .fold(0usize, |acc, (&k, &d)| acc * d + k)
    }

    /// Normalized utilities of every player at a pure profile.
    pub fn pure_utilities(&self, s: &[usize]) -> Vec<f64> {
        match &self.oracle {
            Oracle::Dense(t) => {
                let n = self.players();
                let base = self.profile_index(s) * n;
                t.utilities[base..base + n].to_vec()
            }
            Oracle::Auction(a) => a
                .pure_raw_utilities(s)
                .into_iter()
                .map(|x| self.scale.to_normalized(x))
                .collect(),
            Oracle::MatrixZeroSum(m) => {
                let a = m.entry(s[0], s[1]);
                vec![a, 1.0 - a]
            }
        }
    }

    pub fn pure_raw_utilities(&self, s: &[usize]) -> Vec<f64> {
        match &self.oracle {
            Oracle::Auction(a) => a.pure_raw_utilities(s),
            _ => self
                .pure_utilities(s)
                .into_iter()
                .map(|x| self.scale.to_raw(x))
                .collect(),
        }
    }

    /// Raw utility of the strategyless participant (the auctioneer's revenue).
    pub fn passive_raw(&self, s: &[usize]) -> f64 {
        match &self.oracle {
            Oracle::Dense(t) => t
                .passive
                .as_ref()
                .map_or(0.0, |p| p[self.profile_index(s)]),
            Oracle::Auction(a) => a.revenue(s),
            Oracle::MatrixZeroSum(_) => 0.0,
        }
    }

    /// Raw welfare of a pure profile, including any passive participant.
    pub fn pure_welfare(&self, s: &[usize]) -> f64 {
        match &self.oracle {
            Oracle::Auction(a) => a.allocation_value(s),
            _ => self.pure_raw_utilities(s).iter().sum::<f64>() + self.passive_raw(s),
        }
    }

    fn check_strategy(&self, j: usize, w: &MixedStrategy) -> Result<()> {
        if w.len() != self.dims[j] {
            return Err(Error::Dimension {
                player: j,
                expected: self.dims[j],
                got: w.len(),
            });
        }
        Ok(())
    }

    fn check_profile(&self, profile: &MixedProfile, skip: Option<usize>) -> Result<()> {
        if profile.len() != self.players() {
            return Err(Error::PlayerCount {
                expected: self.players(),
                got: profile.len(),
            });
        }
        for (j, w) in profile.strategies().iter().enumerate() {
            if Some(j) != skip {
                self.check_strategy(j, w)?;
            }
        }
        Ok(())
    }

    /// Expected normalized utility of each pure strategy of player `i`
    /// against the opponents' mixed strategies. Entry `i` of `others` is ignored.
    pub fn expected_utilities(&self, i: usize, others: &MixedProfile) -> Result<UtilityVector> {
        if i >= self.players() {
            return Err(Error::param("player", format!("{i} out of range")));
        }
        self.check_profile(others, Some(i))?;
        let u = match &self.oracle {
            Oracle::Dense(t) => self.dense_expected(t, i, others),
            Oracle::Auction(a) => a
                .expected_raw_utilities(i, others)
                .into_iter()
                .map(|x| self.scale.to_normalized(x))
                .collect(),
            Oracle::MatrixZeroSum(m) => m.expected_utilities(i, others),
        };
        Ok(UtilityVector::from_vec_unchecked(
            u.into_iter().map(|x| x.clamp(0.0, 1.0)).collect(),
        ))
    }

    fn dense_expected(&self, t: &DenseTensor, i: usize, others: &MixedProfile) -> Vec<f64> {
        let n = self.players();
        let mut out = vec![0.0; self.dims[i]];
        for_each_profile(&self.dims, |idx, s| {
            let mut weight = 1.0;
            for (j, &k) in s.iter().enumerate() {
                if j != i {
                    weight *= others.get(j).probs()[k];
                }
            }
            if weight != 0.0 {
                out[s[i]] += weight * t.utilities[idx * n + i];
            }
        });
        out
    }

    /// Expected raw welfare under the product distribution.
    pub fn welfare(&self, profile: &MixedProfile) -> Result<f64> {
        self.check_profile(profile, None)?;
        Ok(match &self.oracle {
            Oracle::Auction(a) => a.expected_allocation_value(profile),
            // row and column utilities always sum to one normalized unit
            Oracle::MatrixZeroSum(_) => 2.0 * self.scale.offset + self.scale.scale,
            Oracle::Dense(_) => {
                let mut total = 0.0;
                for_each_profile(&self.dims, |_, s| {
                    let p: f64 = s
                        .iter()
                        .enumerate()
                        .map(|(j, &k)| profile.get(j).probs()[k])
                        .product();
                    if p != 0.0 {
                        total += p * self.pure_welfare(s);
                    }
                });
                total
            }
        })
    }

    fn require_enumerable(&self, cap: u64) -> Result<()> {
        let count = self.profile_count();
        if count > cap as u128 {
            return Err(Error::EnumerationCap { count, cap });
        }
        Ok(())
    }

    /// Maximum raw welfare over pure profiles and the lexicographically first
    /// maximizer. Auctions are scanned over a reduced bid set (lowest and
    /// highest level) that realizes every allocation.
    pub fn brute_force_opt(&self, cap: u64) -> Result<(f64, Vec<usize>)> {
        if let Oracle::Auction(a) = &self.oracle {
            return a.optimal_welfare(cap);
        }
        self.require_enumerable(cap)?;
        let mut best = f64::NEG_INFINITY;
        let mut arg = vec![0; self.players()];
        for_each_profile(&self.dims, |_, s| {
            let w = self.pure_welfare(s);
            if w > best {
                best = w;
                arg.copy_from_slice(s);
            }
        });
        Ok((best, arg))
    }

    /// Checks `sum_i u_i(s*_i, s_-i) >= lambda * Opt - mu * W(s)` over every
    /// pure profile `s`, in raw units. The passive participant (if any) is
    /// counted at its utility under `s`.
    pub fn verify_smoothness(
        &self,
        lambda: f64,
        mu: f64,
        s_star: &[usize],
        cap: u64,
    ) -> Result<SmoothnessCertificate> {
        let (opt, _) = self.brute_force_opt(cap)?;
        self.verify_smoothness_with_opt(lambda, mu, s_star, opt, cap)
    }

    pub(crate) fn verify_smoothness_with_opt(
        &self,
        lambda: f64,
        mu: f64,
        s_star: &[usize],
        opt: f64,
        cap: u64,
    ) -> Result<SmoothnessCertificate> {
        if !(lambda > 0.0) {
            return Err(Error::param("lambda", "must be positive"));
        }
        if !(mu >= 0.0) {
            return Err(Error::param("mu", "must be nonnegative"));
        }
        self.check_pure(s_star)?;
        self.require_enumerable(cap)?;
        let mut slack = f64::INFINITY;
        let mut worst = vec![0; self.players()];
        let mut deviated = vec![0; self.players()];
        for_each_profile(&self.dims, |_, s| {
            let v = self.deviation_gain(s_star, s, &mut deviated) - lambda * opt
                + mu * self.pure_welfare(s);
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

    /// `sum_i u_i(s*_i, s_-i)` in raw units plus the passive utility at `s`.
    pub(crate) fn deviation_gain(&self, s_star: &[usize], s: &[usize], scratch: &mut [usize]) -> f64 {
        let mut total = self.passive_raw(s);
        for i in 0..self.players() {
            scratch.copy_from_slice(s);
            scratch[i] = s_star[i];
            total += self.pure_raw_utilities(scratch)[i];
        }
        total
    }

    pub(crate) fn check_pure(&self, s: &[usize]) -> Result<()> {
        if s.len() != self.players() {
            return Err(Error::PlayerCount {
                expected: self.players(),
                got: s.len(),
            });
        }
        for (player, (&k, &d)) in s.iter().zip(&self.dims).enumerate() {
            if k >= d {
                return Err(Error::Dimension {
                    player,
                    expected: d,
                    got: k + 1,
                });
            }
        }
        Ok(())
    }

    /// Materializes the utility tensor (keeping any passive participant).
    pub fn to_dense(&self, cap: u64) -> Result<NormalFormGame> {
        self.require_enumerable(cap)?;
        let n = self.players();
        let count = self.profile_count() as usize;
        let mut utilities = Vec::with_capacity(count * n);
        let mut passive = Vec::with_capacity(count);
        for_each_profile(&self.dims, |_, s| {
            utilities.extend(self.pure_utilities(s));
            passive.push(self.passive_raw(s));
        });
        let has_passive = passive.iter().any(|&x| x != 0.0);
        Ok(NormalFormGame {
            label: format!("{}-dense", self.label),
            dims: self.dims.clone(),
            oracle: Oracle::Dense(DenseTensor {
                utilities,
                passive: has_passive.then_some(passive),
            }),
            scale: self.scale,
        })
    }

    /// Parses the text format: a header `n,d1,...,dn`, then one line
    /// `s1,...,sn,u1,...,un` per pure profile (0-based strategy indices, raw
    /// utilities). Every profile must appear exactly once.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header = parse_numbers::<usize>(&header?, line)?;
        let n = *header.first().ok_or(Error::Parse {
            line,
            message: "empty header".into(),
        })?;
        if n == 0 || header.len() != n + 1 {
            return Err(Error::Parse {
                line,
                message: format!("header must list n and {n} strategy counts"),
            });
        }
        let dims = header[1..].to_vec();
        validate_dims(&dims)?;
        let count = profile_count(&dims);
        if count > DEFAULT_ENUMERATION_CAP as u128 {
            return Err(Error::EnumerationCap {
                count,
                cap: DEFAULT_ENUMERATION_CAP,
            });
        }
        let count = count as usize;
        let mut raw = vec![f64::NAN; count * n];
        let mut seen = vec![false; count];
        for (line, text) in lines {
            let text = text?;
            let fields: Vec<&str> = text.split(',').map(str::trim).collect();
            if fields.len() != 2 * n {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, got {}", 2 * n, fields.len()),
                });
            }
            let mut s = Vec::with_capacity(n);
            for (j, f) in fields[..n].iter().enumerate() {
                let k: usize = f.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad strategy index `{f}`"),
                })?;
                if k >= dims[j] {
                    return Err(Error::Parse {
                        line,
                        message: format!("strategy {k} out of range for player {j}"),
                    });
                }
                s.push(k);
            }
            let idx = s.iter().zip(&dims).fold(0usize, |acc, (&k, &d)| acc * d + k);
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate profile {s:?}"),
                });
            }
            for (j, f) in fields[n..].iter().enumerate() {
                raw[idx * n + j] = f.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad utility `{f}`"),
                })?;
            }
        }
        if let Some(missing) = seen.iter().position(|&b| !b) {
            return Err(Error::Inconsistent(format!(
                "profile #{missing} missing from the utility table"
            )));
        }
        NormalFormGame::from_raw(dims, raw)
    }

    /// Writes the dense text format with raw utilities.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, cap: u64) -> Result<()> {
        self.require_enumerable(cap)?;
        let dims: Vec<String> = self.dims.iter().map(ToString::to_string).collect();
        writeln!(out, "{},{}", self.players(), dims.join(","))?;
        let mut result = Ok(());
        for_each_profile(&self.dims, |_, s| {
            if result.is_err() {
                return;
            }
            let mut fields: Vec<String> = s.iter().map(ToString::to_string).collect();
            fields.extend(self.pure_raw_utilities(s).iter().map(ToString::to_string));
            result = writeln!(out, "{}", fields.join(","));
        });
        result.map_err(Error::from)
    }
}

impl fmt::Display for NormalFormGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} players, strategies {:?})", self.label, self.players(), self.dims)
    }
}

/// `(lambda / (1 + mu)) * opt - (1 / (1 + mu)) * sum(regrets) / rounds`.
pub fn poa_welfare_bound(lambda: f64, mu: f64, opt: f64, regrets: &[f64], rounds: usize) -> Result<f64> {
    if rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    if !(lambda > 0.0) || !(mu >= 0.0) {
        return Err(Error::param("lambda/mu", "need lambda > 0 and mu >= 0"));
    }
    let total: f64 = regrets.iter().sum();
    Ok(lambda / (1.0 + mu) * opt - total / rounds as f64 / (1.0 + mu))
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::param("players", "need at least one player"));
    }
    if let Some(player) = dims.iter().position(|&d| d == 0) {
        return Err(Error::Dimension {
            player,
            expected: 1,
            got: 0,
        });
    }
    Ok(())
}

pub fn profile_count(dims: &[usize]) -> u128 {
    dims.iter().map(|&d| d as u128).product()
}

/// Visits every pure profile in lexicographic order (last player fastest),
/// passing its flat index and the profile.
pub fn for_each_profile(dims: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let n = dims.len();
    let mut s = vec![0usize; n];
    let mut idx = 0usize;
    loop {
        f(idx, &s);
        idx += 1;
        let mut j = n;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            s[j] += 1;
            if s[j] < dims[j] {
                break;
            }
            s[j] = 0;
        }
    }
}

fn parse_numbers<T: std::str::FromStr>(text: &str, line: usize) -> Result<Vec<T>> {
    text.split(',')
        .map(|f| {
            f.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number `{}`", f.trim()),
            })
        })
        .collect()
}
