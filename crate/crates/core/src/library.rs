//! Concrete games: the simultaneous first-price auction with a structured
//! oracle, zero-sum matrix games, seeded random games with smoothness search,
//! and the Hedge-versus-best-response lower-bound experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{
    for_each_profile, profile_count, MixedProfile, MixedStrategy, NormalFormGame, Oracle, Scale,
    SmoothnessCertificate,
};
use crate::learner::{BestResponder, LearnerSpec, OnlineLearner, RegularizedLearner};

/// Simultaneous first-price auction with single-unit demand: every bidder
/// picks one item and a bid; the highest bid on each item wins (lowest player
/// index on ties) and pays its bid.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionSpec {
    pub n: usize,
    pub m: usize,
    /// `values[i][j]`: bidder `i`'s value for item `j`.
    pub values: Vec<Vec<f64>>,
    /// Sorted, positive, distinct.
    pub bid_levels: Vec<f64>,
}

impl AuctionSpec {
    /// Every bidder values every item at `v`; bids are the integers `1..=max_bid`.
    pub fn uniform(n: usize, m: usize, v: f64, max_bid: usize) -> Self {
        AuctionSpec {
            n,
            m,
            values: vec![vec![v; m]; n],
            bid_levels: (1..=max_bid).map(|b| b as f64).collect(),
        }
    }

    /// Each (bidder, item) value is `v` with probability 1/2 and 0 otherwise.
    pub fn random_subset(n: usize, m: usize, v: f64, max_bid: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| (0..m).map(|_| if rng.gen_bool(0.5) { v } else { 0.0 }).collect())
            .collect();
        AuctionSpec {
            values,
            ..Self::uniform(n, m, v, max_bid)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "need at least one bidder"));
        }
        if self.m == 0 {
            return Err(Error::param("m", "need at least one item"));
        }
        if self.bid_levels.is_empty() {
            return Err(Error::param("bids", "need at least one bid level"));
        }
        if self.values.len() != self.n || self.values.iter().any(|r| r.len() != self.m) {
            return Err(Error::param("values", format!("expected a {}x{} matrix", self.n, self.m)));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("values", "values must be finite and nonnegative"));
        }
        if self.bid_levels.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(Error::param("bids", "bid levels must be positive"));
        }
        if self.bid_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("bids", "bid levels must be strictly increasing"));
        }
        Ok(())
    }

    pub fn strategies_per_player(&self) -> usize {
        self.m * self.bid_levels.len()
    }

    /// Raw utilities span `[min(0, min v - max bid), max v]`.
    pub fn scale(&self) -> Scale {
        let max_bid = *self.bid_levels.last().unwrap_or(&0.0);
        let lo = self.values.iter().flatten().map(|v| v - max_bid).fold(0.0, f64::min);
        let hi = self.values.iter().flatten().copied().fold(0.0, f64::max);
        Scale::covering(lo, hi)
    }
}

#[derive(Debug, Clone)]
pub struct Auction {
    spec: AuctionSpec,
}

impl Auction {
    pub fn spec(&self) -> &AuctionSpec {
        &self.spec
    }

    /// Strategy index `item * |bids| + bid_index` as `(item, bid_index)`.
    pub fn decode(&self, strategy: usize) -> (usize, usize) {
        let k = self.spec.bid_levels.len();
        (strategy / k, strategy % k)
    }

    pub fn encode(&self, item: usize, bid_index: usize) -> usize {
        item * self.spec.bid_levels.len() + bid_index
    }

    pub fn bid(&self, strategy: usize) -> f64 {
        self.spec.bid_levels[self.decode(strategy).1]
    }

    /// Winner of every item (None if nobody bid on it).
    pub fn winners(&self, s: &[usize]) -> Vec<Option<usize>> {
        let mut best: Vec<Option<(usize, usize)>> = vec![None; self.spec.m];
        for (i, &x) in s.iter().enumerate() {
            let (j, b) = self.decode(x);
            match best[j] {
                Some((_, cur)) if cur >= b => {}
                _ => best[j] = Some((i, b)),
            }
        }
        best.into_iter().map(|w| w.map(|(i, _)| i)).collect()
    }

    pub fn pure_raw_utilities(&self, s: &[usize]) -> Vec<f64> {
        let mut u = vec![0.0; self.spec.n];
        for (j, w) in self.winners(s).into_iter().enumerate() {
            if let Some(i) = w {
                u[i] = self.spec.values[i][j] - self.bid(s[i]);
            }
        }
        u
    }

    pub fn revenue(&self, s: &[usize]) -> f64 {
        self.winners(s).into_iter().flatten().map(|i| self.bid(s[i])).sum()
    }

    pub fn allocation_value(&self, s: &[usize]) -> f64 {
        self.winners(s)
            .into_iter()
            .enumerate()
            .filter_map(|(j, w)| w.map(|i| self.spec.values[i][j]))
            .sum()
    }

    /// `tail[k][j][l]` = probability that bidder `k` bids on item `j` at level `>= l`;
    /// one extra level holds zero.
    fn tails(&self, profile: &MixedProfile) -> Vec<Vec<Vec<f64>>> {
        let nb = self.spec.bid_levels.len();
        profile
            .strategies()
            .iter()
            .map(|w| {
                (0..self.spec.m)
                    .map(|j| {
                        let mut t = vec![0.0; nb + 1];
                        for l in (0..nb).rev() {
                            t[l] = t[l + 1] + w.probs().get(self.encode(j, l)).copied().unwrap_or(0.0);
                        }
                        t
                    })
                    .collect()
            })
            .collect()
    }

    /// Win probability for bidder `i` at `(j, l)`: every lower index must stay
    /// strictly below level `l` on item `j`, every higher index at or below it.
    fn win_probability(&self, tails: &[Vec<Vec<f64>>], i: usize, j: usize, l: usize) -> f64 {
        let mut p = 1.0;
        for (k, t) in tails.iter().enumerate() {
            if k < i {
                p *= 1.0 - t[j][l];
            } else if k > i {
                p *= 1.0 - t[j][l + 1];
            }
        }
        p
    }

    /// Expected raw utility of each strategy of bidder `i`; entry `i` of the
    /// profile is ignored.
    pub fn expected_raw_utilities(&self, i: usize, profile: &MixedProfile) -> Vec<f64> {
        let tails = self.tails(profile);
        let nb = self.spec.bid_levels.len();
        let mut out = vec![0.0; self.spec.m * nb];
        for j in 0..self.spec.m {
            for l in 0..nb {
                let margin = self.spec.values[i][j] - self.spec.bid_levels[l];
                out[self.encode(j, l)] = margin * self.win_probability(&tails, i, j, l);
            }
        }
        out
    }

    fn expected_by_winner(&self, profile: &MixedProfile, f: impl Fn(usize, usize, usize) -> f64) -> f64 {
        let tails = self.tails(profile);
        let nb = self.spec.bid_levels.len();
        let mut total = 0.0;
        for (i, w) in profile.strategies().iter().enumerate() {
            for j in 0..self.spec.m {
                for l in 0..nb {
                    let p = w.probs()[self.encode(j, l)];
                    if p != 0.0 {
                        total += p * self.win_probability(&tails, i, j, l) * f(i, j, l);
                    }
                }
            }
        }
        total
    }

    pub fn expected_allocation_value(&self, profile: &MixedProfile) -> f64 {
        self.expected_by_winner(profile, |i, j, _| self.spec.values[i][j])
    }

    pub fn expected_revenue(&self, profile: &MixedProfile) -> f64 {
        self.expected_by_winner(profile, |_, _, l| self.spec.bid_levels[l])
    }

    /// Optimal allocation value. Values are nonnegative and any allocation is
    /// realizable with winners at the top bid and everyone else at the bottom,
    /// so scanning the two extreme bid levels is exact.
    pub fn optimal_welfare(&self, cap: u64) -> Result<(f64, Vec<usize>)> {
        let nb = self.spec.bid_levels.len();
        let levels: Vec<usize> = if nb == 1 { vec![0] } else { vec![0, nb - 1] };
        let reduced = self.spec.m * levels.len();
        let dims = vec![reduced; self.spec.n];
        let count = profile_count(&dims);
        if count > cap as u128 {
            return Err(Error::EnumerationCap { count, cap });
        }
        let mut best = f64::NEG_INFINITY;
        let mut arg = vec![0; self.spec.n];
        let mut full = vec![0; self.spec.n];
        for_each_profile(&dims, |_, r| {
            for (f, &x) in full.iter_mut().zip(r) {
                *f = self.encode(x / levels.len(), levels[x % levels.len()]);
            }
            let w = self.allocation_value(&full);
            if w > best {
                best = w;
                arg.copy_from_slice(&full);
            }
        });
        Ok((best, arg))
    }
}

pub fn make_auction(spec: AuctionSpec) -> Result<NormalFormGame> {
    spec.validate()?;
    let label = format!("auction-n{}-m{}", spec.n, spec.m);
    let dims = vec![spec.strategies_per_player(); spec.n];
    let scale = spec.scale();
    Ok(NormalFormGame::from_oracle(label, dims, Oracle::Auction(Auction { spec }), scale))
}

/// Two-player zero-sum game with row utility `A[r][c]` and column utility `1 - A[r][c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl MatrixGame {
    pub fn new(a: Vec<Vec<f64>>) -> Result<Self> {
        let rows = a.len();
        let cols = a.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::param("matrix", "must be nonempty"));
        }
        if a.iter().any(|r| r.len() != cols) {
            return Err(Error::param("matrix", "rows have different lengths"));
        }
        let entries: Vec<f64> = a.into_iter().flatten().collect();
        if let Some((index, &value)) = entries
            .iter()
            .enumerate()
            .find(|(_, x)| !(0.0..=1.0).contains(*x))
        {
            return Err(Error::UtilityRange { index, value });
        }
        Ok(MatrixGame { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn expected_utilities(&self, i: usize, profile: &MixedProfile) -> Vec<f64> {
        if i == 0 {
            let col = profile.get(1).probs();
            (0..self.rows)
                .map(|r| (0..self.cols).map(|c| self.entry(r, c) * col[c]).sum())
                .collect()
        } else {
            let row = profile.get(0).probs();
            (0..self.cols)
                .map(|c| (0..self.rows).map(|r| (1.0 - self.entry(r, c)) * row[r]).sum())
                .collect()
        }
    }
}

pub fn make_matrix_game(a: Vec<Vec<f64>>) -> Result<NormalFormGame> {
    let m = MatrixGame::new(a)?;
    let dims = vec![m.rows, m.cols];
    Ok(NormalFormGame::from_oracle("matrix".into(), dims, Oracle::MatrixZeroSum(m), Scale::UNIT))
}

/// Dense game with independent uniform `[0, 1]` utilities from a seeded stream.
pub fn random_game(dims: &[usize], seed: u64) -> Result<NormalFormGame> {
    let count = profile_count(dims);
    if count > crate::game::DEFAULT_ENUMERATION_CAP as u128 {
        return Err(Error::EnumerationCap {
            count,
            cap: crate::game::DEFAULT_ENUMERATION_CAP,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..count as usize * dims.len()).map(|_| rng.gen::<f64>()).collect();
    Ok(NormalFormGame::dense(dims.to_vec(), entries, Scale::UNIT)?.with_label(format!("random-{seed}")))
}

/// Scans every pure profile as the deviation `s*` and returns the first that
/// certifies `(lambda, mu)`-smoothness, or `None`.
pub fn find_smooth_profile(
    game: &NormalFormGame,
    lambda: f64,
    mu: f64,
    cap: u64,
) -> Result<Option<SmoothnessCertificate>> {
    let (opt, _) = game.brute_force_opt(cap)?;
    let mut found = None;
    let mut err = None;
    let mut candidates = Vec::new();
    for_each_profile(game.dims(), |_, s| candidates.push(s.to_vec()));
    for s in candidates {
        match game.verify_smoothness_with_opt(lambda, mu, &s, opt, cap) {
            Ok(c) if c.verified => {
                found = Some(c);
                break;
            }
            Ok(_) => {}
            Err(e) => {
                err = Some(e);
                break;
            }
        }
    }
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

/// Largest `lambda` certified for fixed `mu` and `s*`:
/// `min_s (sum_i u_i(s*_i, s_-i) + mu W(s)) / Opt`.
pub fn tightest_lambda(game: &NormalFormGame, mu: f64, s_star: &[usize], cap: u64) -> Result<f64> {
    game.check_pure(s_star)?;
    let (opt, _) = game.brute_force_opt(cap)?;
    if !(opt > 0.0) {
        return Err(Error::Inconsistent("optimal welfare must be positive".into()));
    }
    if game.profile_count() > cap as u128 {
        return Err(Error::EnumerationCap {
            count: game.profile_count(),
            cap,
        });
    }
    let mut scratch = vec![0; game.players()];
    let mut lo = f64::INFINITY;
    for_each_profile(game.dims(), |_, s| {
        let v = game.deviation_gain(s_star, s, &mut scratch) + mu * game.pure_welfare(s);
        lo = lo.min(v);
    });
    Ok(lo / opt)
}

/// The deviation profile with the largest certifiable `lambda` at this `mu`,
/// as a verified certificate at that `lambda`.
pub fn best_smoothness(game: &NormalFormGame, mu: f64, cap: u64) -> Result<SmoothnessCertificate> {
    let mut candidates = Vec::new();
    for_each_profile(game.dims(), |_, s| candidates.push(s.to_vec()));
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in candidates {
        let l = tightest_lambda(game, mu, &s, cap)?;
        if best.as_ref().is_none_or(|(b, _)| l > *b) {
            best = Some((l, s));
        }
    }
    let (lambda, s_star) = best.expect("games have at least one profile");
    if !(lambda > 0.0) {
        return Err(Error::Inconsistent(format!("no deviation profile gives lambda > 0 at mu = {mu}")));
    }
    game.verify_smoothness(lambda, mu, &s_star, cap)
}

/// Random dense game plus the first deviation profile certifying
/// `(lambda, mu)`-smoothness, if one exists.
pub fn make_random_smooth_game(
    n: usize,
    d: usize,
    lambda: f64,
    mu: f64,
    seed: u64,
) -> Result<(NormalFormGame, Option<SmoothnessCertificate>)> {
    let game = random_game(&vec![d; n], seed)?;
    let cert = find_smooth_profile(&game, lambda, mu, crate::game::DEFAULT_ENUMERATION_CAP)?;
    Ok((game, cert))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundResult {
    pub eta: f64,
    pub rounds: usize,
    /// Realized row regret on `A = I`.
    pub r_game_a: f64,
    /// Realized row regret on `A' = (1; 0)`.
    pub r_game_a_prime: f64,
    /// `(T/2)(e^eta - 1)/(e^eta + 1)` as printed in the source analysis.
    pub closed_form_a: f64,
    /// `(T/4)(e^eta - 1)/(e^eta + 1)`, the value of the alternating dynamics.
    pub alternating_form_a: f64,
    /// `(1 - e^{-T eta}) / (2 (1 - e^{-eta}))`.
    pub closed_form_a_prime_lb: f64,
    /// `sqrt(T (1 - 1/e) / (e + 1)) - 1`.
    pub sqrt_floor: f64,
}

impl LowerBoundResult {
    pub fn max_regret(&self) -> f64 {
        self.r_game_a.max(self.r_game_a_prime)
    }
}

/// Hedge row player against a best-responding column player; returns the
/// row player's regret.
pub fn hedge_vs_best_response(a: Vec<Vec<f64>>, eta: f64, rounds: usize) -> Result<f64> {
    let game = make_matrix_game(a)?;
    let dims = game.dims().to_vec();
    let mut row = RegularizedLearner::new(LearnerSpec::hedge(eta), dims[0])?;
    let mut col = BestResponder::new(dims[1])?;
    let mut cumulative = vec![0.0; dims[0]];
    let mut realized = 0.0;
    for _ in 0..rounds {
        let w = row.play()?;
        let view = MixedProfile::new(vec![w.clone(), MixedStrategy::uniform(dims[1])]);
        let u_col = game.expected_utilities(1, &view)?;
        let c = col.play_against(&u_col)?;
        let profile = MixedProfile::new(vec![w.clone(), c]);
        let u_row = game.expected_utilities(0, &profile)?;
        realized += w.dot(u_row.values());
        for (g, x) in cumulative.iter_mut().zip(u_row.values()) {
            *g += x;
        }
        row.observe(&u_row)?;
        col.observe(&u_col)?;
    }
    Ok(cumulative.iter().copied().fold(f64::NEG_INFINITY, f64::max) - realized)
}

pub fn lower_bound_experiment(eta: f64, rounds: usize) -> Result<LowerBoundResult> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("eta", "must be positive"));
    }
    if rounds == 0 || !rounds.is_multiple_of(2) {
        return Err(Error::param("rounds", "T must be a positive even number"));
    }
    let t = rounds as f64;
    let ratio = eta.exp_m1() / (eta.exp() + 1.0);
    let e = std::f64::consts::E;
    Ok(LowerBoundResult {
        eta,
        rounds,
        r_game_a: hedge_vs_best_response(vec![vec![1.0, 0.0], vec![0.0, 1.0]], eta, rounds)?,
        r_game_a_prime: hedge_vs_best_response(vec![vec![1.0], vec![0.0]], eta, rounds)?,
        closed_form_a: t / 2.0 * ratio,
        alternating_form_a: t / 4.0 * ratio,
        closed_form_a_prime_lb: -(-t * eta).exp_m1() / (-2.0 * (-eta).exp_m1()),
        sqrt_floor: (t * (1.0 - 1.0 / e) / (e + 1.0)).sqrt() - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncontested_bidder() {
        let g = make_auction(AuctionSpec::uniform(1, 1, 20.0, 20)).unwrap();
        assert_eq!(g.pure_raw_utilities(&[0]), vec![19.0]);
        assert_eq!(g.pure_welfare(&[0]), 20.0);
        assert_eq!(g.brute_force_opt(1000).unwrap().0, 20.0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let g = make_auction(AuctionSpec::uniform(2, 1, 20.0, 20)).unwrap();
        let a = g.as_auction().unwrap();
        assert_eq!(a.winners(&[5, 5]), vec![Some(0)]);
        assert_eq!(a.winners(&[4, 5]), vec![Some(1)]);
    }

    #[test]
    fn four_by_four_opt() {
        let g = make_auction(AuctionSpec::uniform(4, 4, 20.0, 20)).unwrap();
        assert_eq!(g.dims(), &[80; 4]);
        assert_eq!(g.brute_force_opt(10_000_000).unwrap().0, 80.0);
        assert_eq!(g.scale(), Scale { offset: 0.0, scale: 20.0 });
    }

    #[test]
    fn win_probability_with_tie_advantage() {
        let spec = AuctionSpec {
            n: 2,
            m: 1,
            values: vec![vec![3.0], vec![3.0]],
            bid_levels: vec![1.0, 2.0],
        };
        let g = make_auction(spec).unwrap();
        let a = g.as_auction().unwrap();
        let p = MixedProfile::uniform(g.dims());
        assert_eq!(a.expected_raw_utilities(0, &p), vec![1.0, 1.0]);
        // bidder 1 bidding 1 wins only if bidder 0... never, bidder 0 always bids >= 1
        assert_eq!(a.expected_raw_utilities(1, &p), vec![0.0, 0.5]);
    }

    #[test]
    fn negative_margins_shift_the_scale() {
        let spec = AuctionSpec {
            n: 1,
            m: 1,
            values: vec![vec![2.0]],
            bid_levels: vec![1.0, 5.0],
        };
        let s = spec.scale();
        assert_eq!((s.offset, s.scale), (-3.0, 5.0));
        let g = make_auction(spec).unwrap();
        assert_eq!(g.pure_utilities(&[1]), vec![0.0]);
        assert!((g.pure_utilities(&[0])[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn subset_values_are_seeded() {
        let a = AuctionSpec::random_subset(3, 4, 20.0, 5, 7);
        assert_eq!(a, AuctionSpec::random_subset(3, 4, 20.0, 5, 7));
        assert!(a.values.iter().flatten().all(|&v| v == 0.0 || v == 20.0));
    }

    #[test]
    fn matrix_games() {
        assert!(make_matrix_game(vec![vec![1.5]]).is_err());
        assert!(make_matrix_game(vec![]).is_err());
        let g = make_matrix_game(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(g.pure_utilities(&[1, 1]), vec![1.0, 0.0]);
        let p = MixedProfile::new(vec![MixedStrategy::uniform(2), MixedStrategy::point(2, 0)]);
        assert_eq!(g.expected_utilities(0, &p).unwrap().values(), &[1.0, 0.0]);
    }

    #[test]
    fn random_games_are_deterministic() {
        let a = random_game(&[2, 3], 11).unwrap();
        let b = random_game(&[2, 3], 11).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        a.write_csv(&mut x, 100).unwrap();
        b.write_csv(&mut y, 100).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn constant_game_is_smooth() {
        let g = NormalFormGame::dense(vec![2, 2], vec![0.5; 8], Scale::UNIT).unwrap();
        let c = find_smooth_profile(&g, 1.0, 0.0, 100).unwrap().unwrap();
        assert_eq!(c.slack, 0.0);
    }

    #[test]
    fn lower_bound_rejects_odd_horizon() {
        assert!(lower_bound_experiment(1.0, 7).is_err());
        assert!(lower_bound_experiment(0.0, 8).is_err());
    }
}
