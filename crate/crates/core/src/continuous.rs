//! Splittable congestion games: players split a flow over explicitly
//! enumerated paths and learn with linearized optimistic FTRL on the scaled
//! simplex, using cost gradients as feedback.

use std::collections::HashMap;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::learner::{certify_rvu, RvuCertificate, RvuParams};
use crate::regularizer::{project_scaled_simplex, softmax, NormPair};

pub const DEFAULT_PATH_CAP: usize = 64;

/// `l(x) = a x^2 + b x + c` with nonnegative coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latency {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Latency {
    pub fn value(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    pub fn derivative(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub latency: Latency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub source: String,
    pub sink: String,
    pub flow: f64,
}

/// Undirected network with per-player simple `s-t` paths (edge indices).
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionNetwork {
    edges: Vec<Edge>,
    demands: Vec<Demand>,
    paths: Vec<Vec<Vec<usize>>>,
}

impl CongestionNetwork {
    pub fn new(edges: Vec<Edge>, demands: Vec<Demand>, path_cap: usize) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::param("players", "need at least one player"));
        }
        for e in &edges {
            let l = e.latency;
            if [l.a, l.b, l.c].iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::param("edge", format!("{}-{}: coefficients must be nonnegative", e.u, e.v)));
            }
        }
        let mut paths = Vec::with_capacity(demands.len());
        for (i, d) in demands.iter().enumerate() {
            if !(d.flow > 0.0 && d.flow.is_finite()) {
                return Err(Error::param("flow", format!("player {i}: flow must be positive")));
            }
            let p = simple_paths(&edges, &d.source, &d.sink, path_cap)?;
            if p.is_empty() {
                return Err(Error::Inconsistent(format!("player {i}: no path from {} to {}", d.source, d.sink)));
            }
            paths.push(p);
        }
        Ok(CongestionNetwork { edges, demands, paths })
    }

    /// Parses lines `edge u v a b c` and `player s t flow`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut demands = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let f: Vec<&str> = body.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{s}` is not a number"),
                })
            };
            match (f[0], f.len()) {
                ("edge", 6) => edges.push(Edge {
                    u: f[1].into(),
                    v: f[2].into(),
                    latency: Latency {
                        a: num(f[3])?,
                        b: num(f[4])?,
                        c: num(f[5])?,
                    },
                }),
                ("player", 4) => demands.push(Demand {
                    source: f[1].into(),
                    sink: f[2].into(),
                    flow: num(f[3])?,
                }),
                ("edge", _) | ("player", _) => {
                    return Err(Error::Parse {
                        line,
                        message: format!("wrong number of fields for `{}`", f[0]),
                    })
                }
                (other, _) => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown record `{other}`"),
                    })
                }
            }
        }
        Self::new(edges, demands, DEFAULT_PATH_CAP)
    }

    /// Two-node network with one edge per latency and players all routing
    /// between the same endpoints.
    pub fn parallel(latencies: &[Latency], flows: &[f64]) -> Result<Self> {
        let edges = latencies
            .iter()
            .map(|&latency| Edge {
                u: "s".into(),
                v: "t".into(),
                latency,
            })
            .collect();
        let demands = flows
            .iter()
            .map(|&flow| Demand {
                source: "s".into(),
                sink: "t".into(),
                flow,
            })
            .collect();
        Self::new(edges, demands, DEFAULT_PATH_CAP)
    }

    pub fn players(&self) -> usize {
        self.demands.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn flow(&self, i: usize) -> f64 {
        self.demands[i].flow
    }

    pub fn paths(&self, i: usize) -> &[Vec<usize>] {
        &self.paths[i]
    }

    /// `B = max_i f_i`.
    pub fn max_flow(&self) -> f64 {
        self.demands.iter().map(|d| d.flow).fold(0.0, f64::max)
    }

    pub fn total_flow(&self) -> f64 {
        self.demands.iter().map(|d| d.flow).sum()
    }

    /// Uniform split of every player's flow.
    pub fn uniform_profile(&self) -> Vec<Vec<f64>> {
        (0..self.players())
            .map(|i| {
                let k = self.paths[i].len();
                vec![self.flow(i) / k as f64; k]
            })
            .collect()
    }

    pub fn check_feasible(&self, profile: &[Vec<f64>]) -> Result<()> {
        if profile.len() != self.players() {
            return Err(Error::PlayerCount {
                expected: self.players(),
                got: profile.len(),
            });
        }
        for (i, w) in profile.iter().enumerate() {
            if w.len() != self.paths[i].len() {
                return Err(Error::Dimension {
                    player: i,
                    expected: self.paths[i].len(),
                    got: w.len(),
                });
            }
            let total: f64 = w.iter().sum();
            if w.iter().any(|x| *x < 0.0 || !x.is_finite()) || (total - self.flow(i)).abs() > 1e-9 * self.flow(i).max(1.0) {
                return Err(Error::InvalidDistribution(format!(
                    "player {i}: flows must be nonnegative and sum to {}",
                    self.flow(i)
                )));
            }
        }
        Ok(())
    }

    /// Flow of player `i` on every edge.
    pub fn player_edge_flows(&self, i: usize, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.edges.len()];
        for (p, &x) in self.paths[i].iter().zip(w) {
            for &e in p {
                out[e] += x;
            }
        }
        out
    }

    fn edge_flows(&self, profile: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let per: Vec<Vec<f64>> = profile
            .iter()
            .enumerate()
            .map(|(i, w)| self.player_edge_flows(i, w))
            .collect();
        let mut total = vec![0.0; self.edges.len()];
        for f in &per {
            for (t, x) in total.iter_mut().zip(f) {
                *t += x;
            }
        }
        (per, total)
    }

    /// `c_i(w) = sum_e f_{i,e} l_e(f_e)`.
    pub fn cost(&self, profile: &[Vec<f64>], i: usize) -> f64 {
        let (per, total) = self.edge_flows(profile);
        self.edges
            .iter()
            .enumerate()
            .map(|(e, edge)| per[i][e] * edge.latency.value(total[e]))
            .sum()
    }

    /// `grad_{i,p} = sum_{e in p} [l_e(f_e) + f_{i,e} l_e'(f_e)]`.
    pub fn gradient(&self, profile: &[Vec<f64>], i: usize) -> Vec<f64> {
        let (per, total) = self.edge_flows(profile);
        let marginal: Vec<f64> = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| edge.latency.value(total[e]) + per[i][e] * edge.latency.derivative(total[e]))
            .collect();
        self.paths[i]
            .iter()
            .map(|p| p.iter().map(|&e| marginal[e]).sum())
            .collect()
    }

    /// Lipschitz constants on the feasible range `[0, sum_i f_i]`.
    pub fn lipschitz_constant(&self) -> LipschitzBundle {
        let total = self.total_flow();
        let k = self
            .edges
            .iter()
            .map(|e| (2.0 * e.latency.a * total + e.latency.b).max(2.0 * e.latency.a))
            .fold(0.0, f64::max);
        let m = self.edges.len() as f64;
        let b = self.max_flow();
        LipschitzBundle {
            k,
            l_edge: 2.0 * k * m,
            l_derived: k * (1.0 + b) * m,
        }
    }

    /// `R = max_i f_i ln |P_i|`, the range of `sum w ln w` on the scaled simplices.
    pub fn regularizer_range(&self) -> f64 {
        (0..self.players())
            .map(|i| self.flow(i) * (self.paths[i].len() as f64).ln())
            .fold(0.0, f64::max)
    }
}

fn simple_paths(edges: &[Edge], s: &str, t: &str, cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut adj: HashMap<&str, Vec<(usize, &str)>> = HashMap::new();
    for (k, e) in edges.iter().enumerate() {
        adj.entry(e.u.as_str()).or_default().push((k, e.v.as_str()));
        if e.u != e.v {
            adj.entry(e.v.as_str()).or_default().push((k, e.u.as_str()));
        }
    }
    let mut out = Vec::new();
    if s == t {
        return Ok(out);
    }
    let mut visited = vec![s];
    let mut path = Vec::new();
    dfs(&adj, s, t, &mut visited, &mut path, &mut out, cap)?;
    Ok(out)
}

fn dfs<'a>(
    adj: &HashMap<&'a str, Vec<(usize, &'a str)>>,
    at: &'a str,
    t: &str,
    visited: &mut Vec<&'a str>,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<()> {
    for &(e, next) in adj.get(at).map_or(&[][..], Vec::as_slice) {
        if visited.contains(&next) {
            continue;
        }
        path.push(e);
        if next == t {
            if out.len() == cap {
                return Err(Error::param("paths", format!("more than {cap} paths between endpoints")));
            }
            out.push(path.clone());
        } else {
            visited.push(next);
            dfs(adj, next, t, visited, path, out, cap)?;
            visited.pop();
        }
        path.pop();
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBundle {
    /// Lipschitz constant of every `l_e` and `l_e'` on the feasible range.
    pub k: f64,
    /// `2 K m`.
    pub l_edge: f64,
    /// `K (1 + B) m`.
    pub l_derived: f64,
}

impl LipschitzBundle {
    pub fn l(&self) -> f64 {
        self.l_edge.max(self.l_derived)
    }

    /// `1 / (2 L n)`.
    pub fn recommended_eta(&self, n: usize) -> f64 {
        1.0 / (2.0 * self.l() * n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTrace {
    pub eta: f64,
    /// `flows[t][i][p]`
    pub flows: Vec<Vec<Vec<f64>>>,
    /// `gradients[t][i][p]`
    pub gradients: Vec<Vec<Vec<f64>>>,
    /// `costs[t][i]`
    pub costs: Vec<Vec<f64>>,
}

impl ContinuousTrace {
    pub fn rounds(&self) -> usize {
        self.flows.len()
    }
}

/// Linearized OFTRL: `w_i^t = f_i softmax(-eta (sum_{s<t} grad_i^s + grad_i^{t-1}))`.
pub fn run_continuous(network: &CongestionNetwork, eta: f64, rounds: usize) -> Result<ContinuousTrace> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("eta", "must be positive"));
    }
    let n = network.players();
    let mut cumulative: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; network.paths(i).len()]).collect();
    let mut last: Vec<Vec<f64>> = cumulative.clone();
    let mut trace = ContinuousTrace {
        eta,
        flows: Vec::with_capacity(rounds),
        gradients: Vec::with_capacity(rounds),
        costs: Vec::with_capacity(rounds),
    };
    for _ in 0..rounds {
        let profile: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let z: Vec<f64> = cumulative[i].iter().zip(&last[i]).map(|(g, m)| -eta * (g + m)).collect();
                softmax(&z).into_iter().map(|p| p * network.flow(i)).collect()
            })
            .collect();
        let grads: Vec<Vec<f64>> = (0..n).map(|i| network.gradient(&profile, i)).collect();
        trace.costs.push((0..n).map(|i| network.cost(&profile, i)).collect());
        for i in 0..n {
            for (c, g) in cumulative[i].iter_mut().zip(&grads[i]) {
                *c += g;
            }
        }
        last.clone_from(&grads);
        trace.flows.push(profile);
        trace.gradients.push(grads);
    }
    Ok(trace)
}

/// `max_{w*} sum_t <w_i^t - w*, grad_i^t>`, attained at a vertex `f_i e_p`.
pub fn linearized_regret(network: &CongestionNetwork, trace: &ContinuousTrace, i: usize) -> f64 {
    let k = network.paths(i).len();
    let mut totals = vec![0.0; k];
    let mut realized = 0.0;
    for t in 0..trace.rounds() {
        let g = &trace.gradients[t][i];
        realized += trace.flows[t][i].iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
        for (s, x) in totals.iter_mut().zip(g) {
            *s += x;
        }
    }
    realized - network.flow(i) * totals.into_iter().fold(f64::INFINITY, f64::min)
}

/// `sum_t c_i(w^t) - min_{w in S_i} sum_t c_i(w, w_-i^t)`. The minimum is found
/// by projected gradient descent on the per-edge cubic
/// `sum_t x l_e(x + g_e^t)`, so the result never overstates the true regret.
pub fn true_regret(network: &CongestionNetwork, trace: &ContinuousTrace, i: usize) -> f64 {
    let m = network.edges().len();
    let t_count = trace.rounds() as f64;
    let mut g1 = vec![0.0; m];
    let mut g2 = vec![0.0; m];
    for t in 0..trace.rounds() {
        let mut others = vec![0.0; m];
        for (j, w) in trace.flows[t].iter().enumerate() {
            if j != i {
                for (o, x) in others.iter_mut().zip(network.player_edge_flows(j, w)) {
                    *o += x;
                }
            }
        }
        for e in 0..m {
            g1[e] += others[e];
            g2[e] += others[e] * others[e];
        }
    }
    let objective = |w: &[f64]| -> f64 {
        let x = network.player_edge_flows(i, w);
        network
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let Latency { a, b, c } = edge.latency;
                let x = x[e];
                a * (t_count * x * x * x + 2.0 * x * x * g1[e] + x * g2[e]) + b * (t_count * x * x + x * g1[e]) + c * t_count * x
            })
            .sum()
    };
    let gradient = |w: &[f64]| -> Vec<f64> {
        let x = network.player_edge_flows(i, w);
        let d: Vec<f64> = network
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let Latency { a, b, c } = edge.latency;
                let x = x[e];
                a * (3.0 * t_count * x * x + 4.0 * x * g1[e] + g2[e]) + b * (2.0 * t_count * x + g1[e]) + c * t_count
            })
            .collect();
        network.paths(i).iter().map(|p| p.iter().map(|&e| d[e]).sum()).collect()
    };

    let f = network.flow(i);
    let k = network.paths(i).len();
    let mut starts = vec![vec![f / k as f64; k]];
    for p in 0..k {
        let mut v = vec![0.0; k];
        v[p] = f;
        starts.push(v);
    }
    let mut best = f64::INFINITY;
    for mut w in starts {
        let mut value = objective(&w);
        let mut step = 1.0;
        for _ in 0..500 {
            let g = gradient(&w);
            let mut improved = false;
            while step > 1e-18 {
                let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
                let cand = project_scaled_simplex(&cand, f);
                let v = objective(&cand);
                if v < value {
                    w = cand;
                    value = v;
                    step *= 2.0;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.min(value);
    }
    let realized: f64 = trace.costs.iter().map(|c| c[i]).sum();
    realized - best
}

/// `sum_i` linearized regret against `n R / eta`, for `eta <= 1 / (2 L n)`.
pub fn certify_continuous_bound(network: &CongestionNetwork, trace: &ContinuousTrace) -> Result<Certificate> {
    let n = network.players();
    let bundle = network.lipschitz_constant();
    let limit = bundle.recommended_eta(n);
    if trace.eta > limit * (1.0 + 1e-12) {
        return Err(Error::param(
            "eta",
            format!("trace step {} exceeds 1/(2Ln) = {limit}", trace.eta),
        ));
    }
    let total: f64 = (0..n).map(|i| linearized_regret(network, trace, i)).sum();
    let rhs = n as f64 * network.regularizer_range() / trace.eta;
    Ok(Certificate::check_tol("continuous-sum-regret", total, rhs, 1e-6))
}

/// Regret-by-variation inequality in gradient space for player `i`. The
/// entropy on a simplex scaled by `f` is `1/f`-strongly convex, so the
/// constants are `(f ln|P| / eta, eta f, 1 / (4 eta f))`.
pub fn certify_continuous_rvu(network: &CongestionNetwork, trace: &ContinuousTrace, i: usize) -> Result<RvuCertificate> {
    let f = network.flow(i);
    let k = network.paths(i).len();
    let eta = trace.eta;
    let params = RvuParams {
        alpha: f * (k as f64).ln() / eta,
        beta: eta * f,
        gamma: 1.0 / (4.0 * eta * f),
        norm: NormPair::L1LInf,
    };
    let negated: Vec<Vec<f64>> = trace
        .gradients
        .iter()
        .map(|g| g[i].iter().map(|x| -x).collect())
        .collect();
    let plays: Vec<Vec<f64>> = trace.flows.iter().map(|w| w[i].clone()).collect();
    let mut totals = vec![0.0; k];
    for g in &trace.gradients {
        for (s, x) in totals.iter_mut().zip(&g[i]) {
            *s += x;
        }
    }
    let best = (0..k).fold(0, |b, p| if totals[p] < totals[b] { p } else { b });
    let mut comparator = vec![0.0; k];
    comparator[best] = f;
    certify_rvu(&negated, &plays, &params, &comparator)
}
