//! Smallest noise scale whose worst-case leakage meets a budget.

use serde::{Deserialize, Serialize};

use crate::discrete::{global_sensitivity, JointDistribution, QuerySpec};
use crate::error::{PdpError, Result};
use crate::gaussian::{max_leakage_gaussian, GaussianModel};
use crate::oracle::pdp_exact_discrete;
use crate::whg::{fast_search, full_mask, full_space_search, mask_indices, SearchOptions};

pub const RELATIVE_TOLERANCE: f64 = 1e-6;
const MAX_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub lambda: f64,
    /// Leakage at `lambda`, never above the target.
    pub leakage: f64,
    pub epsilon: f64,
    pub steps: usize,
}

/// How the discrete leakage at each trial scale is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscreteBackend {
    Full,
    Fast,
    /// Maximum of the exact leakage over every adversary.
    Oracle,
}

/// Bisection for the smallest `lambda` in `[lo, hi]` with `leak(lambda) <= epsilon`.
///
/// `leak` is recomputed at every trial point, so only monotonicity in
/// `lambda` is assumed.
pub fn bisect_lambda(mut leak: impl FnMut(f64) -> Result<f64>, epsilon: f64, lo: f64, hi: f64) -> Result<Calibration> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(PdpError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(PdpError::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    let at_lo = leak(lo)?;
    if at_lo <= epsilon {
        return Ok(Calibration { lambda: lo, leakage: at_lo, epsilon, steps: 0 });
    }
    let mut at_hi = leak(hi)?;
    if at_hi > epsilon {
        return Err(PdpError::Numerical(format!(
            "leakage {at_hi} at lambda = {hi} still exceeds epsilon = {epsilon}"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut steps = 0;
    while hi - lo > RELATIVE_TOLERANCE * hi && steps < MAX_STEPS {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let v = leak(mid)?;
        if v <= epsilon {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid;
        }
    }
    Ok(Calibration { lambda: hi, leakage: at_hi, epsilon, steps })
}

/// The search bracket `[GS / (10 eps), 10 n GS / eps]`.
pub fn bracket(gs: f64, n: usize, epsilon: f64) -> (f64, f64) {
    (gs / (10.0 * epsilon), 10.0 * n as f64 * gs / epsilon)
}

/// Largest exact leakage over every adversary `(i, K)`.
pub fn max_oracle_leakage(dist: &JointDistribution, query: &QuerySpec, lambda: f64) -> Result<f64> {
    let n = dist.n();
    let all = full_mask(n);
    let mut best = 0.0f64;
    for i in 0..n {
        let others = all & !(1 << i);
        let mut sub = others;
        loop {
            best = best.max(pdp_exact_discrete(dist, query, lambda, i, &mask_indices(sub))?.leakage);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
    }
    Ok(best)
}

pub fn calibrate_discrete(
    dist: &JointDistribution,
    query: &QuerySpec,
    epsilon: f64,
    backend: DiscreteBackend,
    opts: &SearchOptions,
) -> Result<Calibration> {
    let gs = global_sensitivity(dist, query)?;
    if gs <= 0.0 {
        return Err(PdpError::ZeroSensitivity);
    }
    let (lo, hi) = bracket(gs, dist.n(), epsilon);
    bisect_lambda(
        |lambda| match backend {
            DiscreteBackend::Full => Ok(full_space_search(dist, query, lambda, opts)?.1.leakage),
            DiscreteBackend::Fast => Ok(fast_search(dist, query, lambda, opts)?.1.leakage),
            DiscreteBackend::Oracle => max_oracle_leakage(dist, query, lambda),
        },
        epsilon,
        lo,
        hi,
    )
}

/// The Gaussian model's own `lambda` is ignored; `M` plays the role of `GS`.
pub fn calibrate_gaussian(model: &GaussianModel, epsilon: f64, cap: usize) -> Result<Calibration> {
    let (lo, hi) = bracket(model.range(), model.n(), epsilon);
    bisect_lambda(|lambda| Ok(max_leakage_gaussian(&model.with_lambda(lambda)?, cap)?.leakage), epsilon, lo, hi)
}
