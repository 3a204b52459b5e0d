//! Strongly convex regularizers on the probability simplex.

use crate::error::{Error, Result};
use crate::game::MixedStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// `sum_j w_j ln w_j`, 1-strongly convex w.r.t. the l1 norm.
    NegativeEntropy,
    /// `||w||_2^2 / 2`, 1-strongly convex w.r.t. the l2 norm.
    SquaredEuclidean,
}

/// A primal norm and its dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormPair {
    /// l1 on strategies, l-infinity on utilities.
    L1LInf,
    /// l2 on both sides.
    L2L2,
}

impl NormPair {
    pub fn primal(&self, v: &[f64]) -> f64 {
        match self {
            NormPair::L1LInf => v.iter().map(|x| x.abs()).sum(),
            NormPair::L2L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn dual(&self, v: &[f64]) -> f64 {
        match self {
            NormPair::L1LInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormPair::L2L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn primal_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.primal(&d)
    }

    pub fn dual_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.dual(&d)
    }
}

/// The two range constants used by the optimistic algorithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterConstant {
    /// `sup R - inf R` over the simplex (FTRL family).
    pub r_ftrl: f64,
    /// `sup_f D_R(f, g0)` with `g0` the initial point (mirror descent).
    pub r_omd: f64,
}

impl Regularizer {
    pub fn norm_pair(&self) -> NormPair {
        match self {
            Regularizer::NegativeEntropy => NormPair::L1LInf,
            Regularizer::SquaredEuclidean => NormPair::L2L2,
        }
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        match self {
            Regularizer::NegativeEntropy => w.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum(),
            Regularizer::SquaredEuclidean => 0.5 * w.iter().map(|p| p * p).sum::<f64>(),
        }
    }

    /// Minimizer of the regularizer over the simplex: uniform for both kinds.
    pub fn initial_point(&self, d: usize) -> Result<MixedStrategy> {
        if d == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        Ok(MixedStrategy::uniform(d))
    }

    pub fn diameter(&self, d: usize) -> DiameterConstant {
        let d = d as f64;
        match self {
            Regularizer::NegativeEntropy => DiameterConstant {
                r_ftrl: d.ln(),
                r_omd: d.ln(),
            },
            Regularizer::SquaredEuclidean => {
                let r = 0.5 * (1.0 - 1.0 / d);
                DiameterConstant { r_ftrl: r, r_omd: r }
            }
        }
    }

    /// `argmax_w <w, cumulative> - R(w) / eta` over the simplex.
    pub fn ftrl_argmax(&self, cumulative: &[f64], eta: f64) -> Result<MixedStrategy> {
        check_eta(eta)?;
        if cumulative.is_empty() {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        if cumulative.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("cumulative utilities"));
        }
        let scaled: Vec<f64> = cumulative.iter().map(|g| eta * g).collect();
        Ok(MixedStrategy::from_vec_unchecked(match self {
            Regularizer::NegativeEntropy => softmax(&scaled),
            Regularizer::SquaredEuclidean => project_simplex(&scaled),
        }))
    }

    /// Mirror-descent prox point `argmax_w eta <w, u> - D_R(w, g)`.
    pub fn prox_step(&self, g: &MixedStrategy, u: &[f64], eta: f64) -> Result<MixedStrategy> {
        check_eta(eta)?;
        if g.len() != u.len() {
            return Err(Error::Dimension {
                player: 0,
                expected: g.len(),
                got: u.len(),
            });
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("utility vector"));
        }
        Ok(MixedStrategy::from_vec_unchecked(match self {
            Regularizer::NegativeEntropy => {
                check_interior(g.probs())?;
                let logs: Vec<f64> = g.probs().iter().map(|p| p.ln()).collect();
                softmax(&shifted(&logs, u, eta))
            }
            Regularizer::SquaredEuclidean => {
                let v: Vec<f64> = g.probs().iter().zip(u).map(|(p, x)| p + eta * x).collect();
                project_simplex(&v)
            }
        }))
    }

    /// Bregman divergence `D_R(w, g)`.
    pub fn bregman(&self, w: &[f64], g: &[f64]) -> Result<f64> {
        match self {
            Regularizer::NegativeEntropy => {
                check_interior(g)?;
                Ok(w.iter()
                    .zip(g)
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(&p, &q)| p * (p / q).ln())
                    .sum::<f64>()
                    .max(0.0))
            }
            Regularizer::SquaredEuclidean => {
                Ok(0.5 * w.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            }
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::param("eta", format!("step size must be positive and finite, got {eta}")));
    }
    Ok(())
}

fn check_interior(g: &[f64]) -> Result<()> {
    match g.iter().position(|&p| p <= 0.0) {
        Some(index) => Err(Error::BoundaryPoint { index }),
        None => Ok(()),
    }
}

pub(crate) fn shifted(logs: &[f64], u: &[f64], eta: f64) -> Vec<f64> {
    logs.iter().zip(u).map(|(l, x)| l + eta * x).collect()
}

/// Softmax with max-subtraction.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Log-softmax: `z - logsumexp(z)`.
pub(crate) fn log_normalize(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    z.iter().map(|x| x - lse).collect()
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projection onto `{w >= 0, sum w = total}`.
pub fn project_scaled_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let scaled: Vec<f64> = v.iter().map(|x| x / total).collect();
    project_simplex(&scaled).into_iter().map(|x| x * total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENT: Regularizer = Regularizer::NegativeEntropy;
    const EUC: Regularizer = Regularizer::SquaredEuclidean;

    #[test]
    fn initial_points_are_uniform() {
        assert_eq!(ENT.initial_point(4).unwrap().probs(), &[0.25; 4]);
        assert_eq!(EUC.initial_point(2).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(ENT.initial_point(1).unwrap().probs(), &[1.0]);
        assert!(ENT.initial_point(0).is_err());
    }

    #[test]
    fn ftrl_closed_forms() {
        let w = ENT.ftrl_argmax(&[1.0, 0.0], 2f64.ln()).unwrap();
        assert!((w.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        let w = ENT.ftrl_argmax(&[3.5, 3.5, 3.5], 7.0).unwrap();
        for p in w.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        // KKT for d = 2: w = (0.5 + (a - b) / 2, 0.5 - (a - b) / 2) when interior
        let w = EUC.ftrl_argmax(&[0.2, 0.0], 1.0).unwrap();
        assert!((w.probs()[0] - 0.6).abs() < 1e-15 && (w.probs()[1] - 0.4).abs() < 1e-15);
        assert!(ENT.ftrl_argmax(&[f64::NAN, 0.0], 1.0).is_err());
        assert!(ENT.ftrl_argmax(&[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn prox_closed_forms() {
        let g = MixedStrategy::uniform(2);
        let w = ENT.prox_step(&g, &[1.0, 0.0], 2f64.ln()).unwrap();
        assert!((w.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        let g3 = MixedStrategy::new(vec![0.2, 0.3, 0.5]).unwrap();
        let same = ENT.prox_step(&g3, &[0.0; 3], 0.7).unwrap();
        for (a, b) in same.probs().iter().zip(g3.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = EUC.prox_step(&g, &[0.2, 0.0], 1.0).unwrap();
        assert!((w.probs()[0] - 0.6).abs() < 1e-15);
        let boundary = MixedStrategy::point(3, 1);
        assert!(matches!(
            ENT.prox_step(&boundary, &[0.0; 3], 1.0),
            Err(Error::BoundaryPoint { index: 0 })
        ));
    }

    #[test]
    fn bregman_values() {
        let g = [0.5, 0.5];
        assert_eq!(ENT.bregman(&g, &g).unwrap(), 0.0);
        assert!((ENT.bregman(&[1.0, 0.0], &g).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((EUC.bregman(&[1.0, 0.0], &g).unwrap() - 0.25).abs() < 1e-15);
        assert!(ENT.bregman(&g, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn diameters() {
        assert!((ENT.diameter(5).r_ftrl - 5f64.ln()).abs() < 1e-12);
        assert_eq!(ENT.diameter(1).r_ftrl, 0.0);
        assert!((EUC.diameter(2).r_omd - 0.25).abs() < 1e-15);
    }

    #[test]
    fn projection_handles_clipping() {
        let w = project_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
        let w = project_scaled_simplex(&[1.0, 1.0], 3.0);
        assert_eq!(w, vec![1.5, 1.5]);
    }
}
