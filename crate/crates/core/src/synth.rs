//! Synthetic inputs: graphs with beta-distributed edges, equicorrelated
//! covariance matrices and discrete tables with a target average correlation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::discrete::{strides_for, JointDistribution};
use crate::error::{PdpError, Result};
use crate::whg::{EdgeRule, SyntheticWhg};

/// Default first shape parameter of the edge distribution.
pub const DEFAULT_BETA_ALPHA: f64 = 2.0;
/// Largest table `gen_discrete_corr` will build.
pub const MAX_TABLE_CELLS: usize = 1 << 22;
const MAX_BISECTION_STEPS: usize = 500;
const CORR_TOLERANCE: f64 = 0.1;

/// Synthetic graph on `n` tuples with first layer 1 and edges
/// `sign(c) * Beta(alpha, alpha (1 - m) / m)`, `m = |c|`, so the mean edge is `c`.
pub fn gen_whg_edges(n: usize, aver_corr: f64, seed: u64, alpha: f64) -> Result<SyntheticWhg> {
    if !(aver_corr.abs() <= 1.0) {
        return Err(PdpError::InvalidParameter(format!("average correlation must lie in [-1, 1], got {aver_corr}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(PdpError::InvalidParameter(format!("beta shape must be positive, got {alpha}")));
    }
    let m = aver_corr.abs();
    let rule = if m == 0.0 {
        EdgeRule::Constant(0.0)
    } else if m == 1.0 {
        EdgeRule::Constant(aver_corr)
    } else {
        EdgeRule::Beta { alpha, beta: alpha * (1.0 - m) / m, sign: aver_corr.signum(), scale: 1.0, seed }
    };
    SyntheticWhg::new(n, vec![1.0; n], rule)
}

/// Feasible average correlations of the equicorrelated construction, as an open interval.
pub fn covariance_range(n: usize) -> (f64, f64) {
    let lo = if n > 1 { -1.0 / (n as f64 - 1.0) } else { f64::NEG_INFINITY };
    (lo, 1.0)
}

/// Covariance with off-diagonal entries `sign(c)` and diagonal `1 / |c|`,
/// so every pairwise correlation is `c`. `c = 0` gives the identity.
pub fn gen_covariance(n: usize, aver_coeff: f64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(PdpError::InvalidParameter("no tuples".into()));
    }
    let (lo, hi) = covariance_range(n);
    if !(aver_coeff > lo && aver_coeff < hi) {
        return Err(PdpError::InfeasibleCorrelation { requested: aver_coeff, min: lo.max(-1.0), max: hi });
    }
    if aver_coeff == 0.0 {
        return Ok((0..n).map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect());
    }
    let d = 1.0 / aver_coeff.abs();
    let off = aver_coeff.signum();
    Ok((0..n).map(|r| (0..n).map(|c| if r == c { d } else { off }).collect()).collect())
}

/// Outcome of [`gen_discrete_corr`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteCorrInfo {
    pub target: f64,
    pub achieved: f64,
    /// Weight of the correlated component in the mixture.
    pub weight: f64,
    pub iterations: usize,
    /// Whether `achieved` is within 0.1 of `target`.
    pub converged: bool,
}

/// Average Pearson correlation over all pairs of tuples.
pub fn average_correlation(dist: &JointDistribution) -> Result<f64> {
    let n = dist.n();
    if n < 2 {
        return Ok(0.0);
    }
    let none = Default::default();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += dist.pearson_corr(i, j, &none)?;
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Discrete table over `n` tuples with domain `{0, ..., s - 1}` whose average
/// pairwise correlation is close to `target`.
///
/// The table is `(1 - w) P_ind + w Q`: `P_ind` has seed-dependent marginals
/// near uniform, `Q` puts all tuples on the same value (positive target) or
/// exactly one tuple on the top value (negative target). `w` is found by
/// bisection; a target outside the reachable range returns the closest table
/// with `converged = false`.
pub fn gen_discrete_corr(n: usize, target: f64, domain_size: usize, seed: u64) -> Result<(JointDistribution, DiscreteCorrInfo)> {
    if n < 1 || domain_size < 2 {
        return Err(PdpError::InvalidParameter("need at least one tuple and two domain values".into()));
    }
    if !(target.abs() <= 1.0) {
        return Err(PdpError::InvalidParameter(format!("target correlation must lie in [-1, 1], got {target}")));
    }
    let cells = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(domain_size)).filter(|&c| c <= MAX_TABLE_CELLS);
    let Some(cells) = cells else {
        return Err(PdpError::SizeCap {
            what: "discrete table",
            n,
            cap: MAX_TABLE_CELLS,
            estimate: (domain_size as f64).powi(n as i32),
        });
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = 1.0 / domain_size as f64;
    // flat Dirichlet draw, shrunk toward uniform
    let marginals: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let e: Vec<f64> = (0..domain_size).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = e.iter().sum();
            e.iter().map(|x| 0.95 * uniform + 0.05 * x / total).collect()
        })
        .collect();
    let sizes = vec![domain_size; n];
    let strides = strides_for(&sizes);
    let mut independent = vec![1.0; cells];
    let mut idx = vec![0usize; n];
    for cell in independent.iter_mut() {
        *cell = idx.iter().enumerate().map(|(t, &v)| marginals[t][v]).product();
        crate::discrete::advance(&mut idx, &sizes);
    }
    let mut correlated = vec![0.0; cells];
    if target >= 0.0 {
        for v in 0..domain_size {
            correlated[strides.iter().map(|s| v * s).sum::<usize>()] += uniform;
        }
    } else {
        for t in 0..n {
            correlated[(domain_size - 1) * strides[t]] += 1.0 / n as f64;
        }
    }
    let domains = vec![(0..domain_size).map(|v| v as f64).collect::<Vec<_>>(); n];
    let build = |w: f64| {
        let probs = independent.iter().zip(&correlated).map(|(a, b)| (1.0 - w) * a + w * b).collect();
        JointDistribution::new(domains.clone(), probs)
    };
    let eval = |w: f64| -> Result<(JointDistribution, f64)> {
        let d = build(w)?;
        let c = average_correlation(&d)?;
        Ok((d, c))
    };
    if target == 0.0 || n == 1 {
        let (d, c) = eval(0.0)?;
        return Ok((d, DiscreteCorrInfo { target, achieved: c, weight: 0.0, iterations: 0, converged: (c - target).abs() <= CORR_TOLERANCE }));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let (d_hi, c_hi) = eval(1.0)?;
    let mut best = (d_hi, c_hi, 1.0);
    let mut iterations = 0;
    let reachable = if target > 0.0 { c_hi >= target } else { c_hi <= target };
    if reachable {
        while iterations < MAX_BISECTION_STEPS && hi - lo > 1e-12 {
            iterations += 1;
            let w = 0.5 * (lo + hi);
            let (d, c) = eval(w)?;
            if (c - target).abs() < (best.1 - target).abs() {
                best = (d, c, w);
            }
            if (c - target).abs() <= 1e-9 {
                break;
            }
            // the correlation moves toward `target` as `w` grows
            if (target > 0.0) == (c < target) {
                lo = w;
            } else {
                hi = w;
            }
        }
    }
    let (d, c, w) = best;
    Ok((d, DiscreteCorrInfo { target, achieved: c, weight: w, iterations, converged: (c - target).abs() <= CORR_TOLERANCE }))
}
