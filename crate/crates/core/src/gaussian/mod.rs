//! Leakage for a multivariate Gaussian database with bounded attacked range.
//!
//! Given `x_i` and the known `x_K`, the sum of the unknown tuples is normal
//! with mean `mu0 = mu00 + mu0_i * x_i + sum_k mu0_k * x_k` and variance
//! `sigma0^2`. Moving `x_i` by `M` shifts the output's location by
//! `M (1 + mu0_i)`, which gives the leakage `(M / lambda) |1 + mu0_i|`.

mod gfun;

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gfun::{g_function, log_g, log_g_slope, log_g_slope_odds};

use crate::error::{PdpError, Result};
use crate::report::{Algorithm, LeakageReport};
use crate::whg::{full_mask, mask_indices, AdversaryNode};

/// Default largest `n` for [`max_leakage_gaussian`].
pub const DEFAULT_GAUSSIAN_CAP: usize = 20;
const SYMMETRY_TOL: f64 = 1e-10;
const PIVOT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    range: f64,
    lambda: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(PdpError::InvalidModel(format!("{name} must be positive, got {v}")))
    }
}

/// Cholesky factor if every pivot exceeds the relative floor.
fn checked_cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let k = m.nrows();
    if k == 0 {
        return None;
    }
    let floor = PIVOT_REL_TOL * m.trace() / k as f64;
    let ch = Cholesky::new(m.clone())?;
    let l = ch.l_dirty();
    (0..k).all(|d| l[(d, d)] * l[(d, d)] > floor).then_some(ch)
}

impl GaussianModel {
    /// Validates a positive definite covariance matrix.
    pub fn new(mu: Vec<f64>, sigma: Vec<Vec<f64>>, range: f64, lambda: f64) -> Result<Self> {
        let m = Self::unchecked(mu, sigma, range, lambda)?;
        if checked_cholesky(&m.sigma).is_none() {
            return Err(PdpError::InvalidModel("covariance matrix is not positive definite".into()));
        }
        Ok(m)
    }

    /// Accepts a positive semidefinite covariance, e.g. perfectly correlated
    /// pairs. Conditioning on a singular block still fails.
    pub fn new_semidefinite(mu: Vec<f64>, sigma: Vec<Vec<f64>>, range: f64, lambda: f64) -> Result<Self> {
        let m = Self::unchecked(mu, sigma, range, lambda)?;
        let eig = m.sigma.clone().symmetric_eigenvalues();
        let scale = m.sigma.trace().abs().max(1.0);
        if eig.iter().any(|&e| e < -1e-9 * scale) {
            return Err(PdpError::InvalidModel("covariance matrix is not positive semidefinite".into()));
        }
        Ok(m)
    }

    fn unchecked(mu: Vec<f64>, sigma: Vec<Vec<f64>>, range: f64, lambda: f64) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(PdpError::InvalidModel("no tuples".into()));
        }
        if sigma.len() != n || sigma.iter().any(|r| r.len() != n) {
            return Err(PdpError::InvalidModel(format!("covariance must be {n}x{n}")));
        }
        if mu.iter().chain(sigma.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(PdpError::InvalidModel("non-finite entry".into()));
        }
        check_positive("M", range)?;
        check_positive("lambda", lambda)?;
        let s = DMatrix::from_fn(n, n, |r, c| sigma[r][c]);
        for r in 0..n {
            for c in 0..r {
                if (s[(r, c)] - s[(c, r)]).abs() > SYMMETRY_TOL {
                    return Err(PdpError::InvalidModel(format!("covariance is not symmetric at ({r}, {c})")));
                }
            }
        }
        Ok(Self { mu: DVector::from_vec(mu), sigma: s, range, lambda })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }
    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
    /// Bound `M` on `|x_i - x_i'|`.
    pub fn range(&self) -> f64 {
        self.range
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(Self { lambda, ..self.clone() })
    }

    pub fn with_mu(&self, mu: Vec<f64>) -> Result<Self> {
        if mu.len() != self.n() {
            return Err(PdpError::InvalidModel(format!("mean has {} entries for {} tuples", mu.len(), self.n())));
        }
        Ok(Self { mu: DVector::from_vec(mu), ..self.clone() })
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(PdpError::IndexOutOfRange { index: i, n: self.n() })
        }
    }

    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.sigma[(rows[r], cols[c])])
    }
}

/// `(Sigma_{U,2} Sigma_22^{-1}, known, unknown)`; `known` and `unknown` are sorted.
fn regression(model: &GaussianModel, known: &[usize]) -> Result<(DMatrix<f64>, Vec<usize>, Vec<usize>)> {
    let mut known = known.to_vec();
    known.sort_unstable();
    known.dedup();
    for &k in &known {
        model.check_index(k)?;
    }
    let unknown: Vec<usize> = (0..model.n()).filter(|u| known.binary_search(u).is_err()).collect();
    if known.is_empty() {
        return Ok((DMatrix::zeros(unknown.len(), 0), known, unknown));
    }
    let s22 = model.block(&known, &known);
    let s12 = model.block(&unknown, &known);
    let a = if known.len() == 1 {
        let v = s22[(0, 0)];
        if v.is_nan() || v <= 0.0 {
            return Err(PdpError::SingularConditioning);
        }
        s12 / v
    } else {
        let ch = checked_cholesky(&s22).ok_or(PdpError::SingularConditioning)?;
        // A = S12 S22^{-1}  <=>  S22 A^T = S12^T
        ch.solve(&s12.transpose()).transpose()
    };
    Ok((a, known, unknown))
}

/// Mean and covariance of the unknown tuples (increasing index order) given `x_known = vals`.
pub fn conditional_gaussian(
    model: &GaussianModel,
    known: &[usize],
    vals: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if known.len() != vals.len() {
        return Err(PdpError::InvalidParameter(format!("{} known indices but {} values", known.len(), vals.len())));
    }
    let given: BTreeMap<usize, f64> = known.iter().copied().zip(vals.iter().copied()).collect();
    if given.len() != known.len() {
        return Err(PdpError::InvalidParameter("known indices repeat".into()));
    }
    let (a, known, unknown) = regression(model, known)?;
    let dev = DVector::from_iterator(known.len(), known.iter().map(|k| given[k] - model.mu[*k]));
    let mu1 = DVector::from_iterator(unknown.len(), unknown.iter().map(|&u| model.mu[u]));
    let mean = mu1 + &a * dev;
    let s11 = model.block(&unknown, &unknown);
    let s21 = model.block(&known, &unknown);
    let mut cov = s11 - &a * s21;
    // symmetrize against rounding
    let t = cov.transpose();
    cov = (cov + t) * 0.5;
    Ok((mean, cov))
}

/// Linear expansion of the conditional mean of the unknown-tuple sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mu0Expansion {
    pub mu00: f64,
    pub coef_i: f64,
    pub coef_k: BTreeMap<usize, f64>,
    pub sigma0_sq: f64,
}

impl Mu0Expansion {
    /// `mu0` at the given values of `x_i` and the known tuples.
    pub fn evaluate(&self, x_i: f64, x_k: &BTreeMap<usize, f64>) -> f64 {
        self.mu00 + self.coef_i * x_i + self.coef_k.iter().map(|(k, c)| c * x_k[k]).sum::<f64>()
    }
}

fn prior_set(model: &GaussianModel, i: usize, k: &[usize]) -> Result<Vec<usize>> {
    model.check_index(i)?;
    let mut known: Vec<usize> = k.iter().copied().filter(|&t| t != i).collect();
    for &t in &known {
        model.check_index(t)?;
    }
    known.push(i);
    known.sort_unstable();
    known.dedup();
    Ok(known)
}

pub fn mu0_expand(model: &GaussianModel, i: usize, k: &[usize]) -> Result<Mu0Expansion> {
    let known = prior_set(model, i, k)?;
    let mut coef_k = BTreeMap::new();
    if known.len() == model.n() {
        // nothing left to infer, so skip the (possibly singular) regression
        for &t in &known {
            if t != i {
                coef_k.insert(t, 0.0);
            }
        }
        return Ok(Mu0Expansion { mu00: 0.0, coef_i: 0.0, coef_k, sigma0_sq: 0.0 });
    }
    let (a, known, unknown) = regression(model, &known)?;
    let c: Vec<f64> = (0..known.len()).map(|col| (0..unknown.len()).map(|r| a[(r, col)]).sum()).collect();
    let mut coef_i = 0.0;
    let mut mu00: f64 = unknown.iter().map(|&u| model.mu[u]).sum();
    for (col, &t) in known.iter().enumerate() {
        mu00 -= c[col] * model.mu[t];
        if t == i {
            coef_i = c[col];
        } else {
            coef_k.insert(t, c[col]);
        }
    }
    let s11 = model.block(&unknown, &unknown);
    let s21 = model.block(&known, &unknown);
    let cov = s11 - &a * s21;
    let sigma0_sq = cov.sum().max(0.0);
    Ok(Mu0Expansion { mu00, coef_i, coef_k, sigma0_sq })
}

/// `(M / lambda) |1 + mu0_i|` for adversary `A(i, K)`.
pub fn leakage_gaussian(model: &GaussianModel, i: usize, k: &[usize]) -> Result<f64> {
    let e = mu0_expand(model, i, k)?;
    Ok(model.range / model.lambda * (1.0 + e.coef_i).abs())
}

/// Weakest adversary, straight from the covariance entries:
/// `|1 + sum_{j != i} sigma_ij / sigma_ii| * M / lambda`.
pub fn weakest_adversary_leakage(model: &GaussianModel, i: usize) -> Result<f64> {
    model.check_index(i)?;
    let sii = model.sigma[(i, i)];
    if sii <= 0.0 {
        return Err(PdpError::SingularConditioning);
    }
    let s: f64 = (0..model.n()).filter(|&j| j != i).map(|j| model.sigma[(j, i)] / sii).sum();
    Ok(model.range / model.lambda * (1.0 + s).abs())
}

/// Exact maximum over every adversary `(i, K)`.
pub fn max_leakage_gaussian(model: &GaussianModel, cap: usize) -> Result<LeakageReport> {
    let start = Instant::now();
    let n = model.n();
    if n > cap {
        return Err(PdpError::SizeCap {
            what: "Gaussian subset enumeration",
            n,
            cap,
            estimate: n as f64 * 2f64.powi(n as i32 - 1),
        });
    }
    let all = full_mask(n);
    let per_attack: Vec<Vec<(AdversaryNode, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let others = all & !(1 << i);
            let mut out = Vec::with_capacity(1 << (n - 1));
            let mut sub = others;
            loop {
                let node = AdversaryNode { attack: i, prior: sub };
                out.push((node, leakage_gaussian(model, i, &mask_indices(sub))?));
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & others;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut layers = vec![Vec::new(); n];
    for v in per_attack {
        for (node, l) in v {
            layers[node.layer(n) - 1].push((node, l));
        }
    }
    for l in &mut layers {
        l.sort_by_key(|x| x.0);
    }
    Ok(LeakageReport::from_layers(
        Algorithm::ClosedForm,
        n,
        layers.iter().map(Vec::as_slice),
        start.elapsed().as_secs_f64(),
    ))
}
