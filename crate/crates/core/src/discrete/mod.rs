//! Discrete joint distributions over `n` tuples and the quantities derived
//! from them: marginals, conditionals, conditional Pearson correlation,
//! sensitivities of linear queries and the linear-to-sum query transform.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{PdpError, Result};

/// Assignments with probability below this are treated as impossible.
pub const PROB_EPS: f64 = 1e-12;

/// Tolerance on the total probability accepted at load time.
pub const LOAD_TOLERANCE: f64 = 1e-9;

/// Known tuple values, keyed by tuple index. Values are positions in the
/// tuple's sorted domain, not the domain values themselves.
pub type Assignment = BTreeMap<usize, usize>;

/// Dense joint probability table.
///
/// Cells are stored row-major over the product of the domains: the last
/// tuple varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    domains: Vec<Vec<f64>>,
    probs: Vec<f64>,
    strides: Vec<usize>,
}

impl JointDistribution {
    /// Validates the table and renormalizes it once.
    pub fn new(domains: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if domains.is_empty() {
            return Err(PdpError::InvalidDistribution("no tuples".into()));
        }
        for (i, d) in domains.iter().enumerate() {
            if d.is_empty() {
                return Err(PdpError::InvalidDistribution(format!("domain of tuple {i} is empty")));
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(PdpError::InvalidDistribution(format!("domain of tuple {i} has a non-finite value")));
            }
            if d.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PdpError::InvalidDistribution(format!(
                    "domain of tuple {i} is not strictly increasing"
                )));
            }
        }
        let cells = domains
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(d.len()))
            .ok_or_else(|| PdpError::InvalidDistribution("table size overflows".into()))?;
        if probs.len() != cells {
            return Err(PdpError::InvalidDistribution(format!(
                "expected {cells} probabilities for the domain product, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(PdpError::InvalidDistribution("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > LOAD_TOLERANCE {
            return Err(PdpError::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self::from_parts(domains, probs))
    }

    fn from_parts(domains: Vec<Vec<f64>>, probs: Vec<f64>) -> Self {
        let strides = strides_for(&domains.iter().map(Vec::len).collect::<Vec<_>>());
        Self { domains, probs, strides }
    }

    /// Independent tuples with the given marginals.
    pub fn product(domains: Vec<Vec<f64>>, marginals: &[Vec<f64>]) -> Result<Self> {
        if domains.len() != marginals.len() {
            return Err(PdpError::InvalidDistribution("one marginal per tuple is required".into()));
        }
        let sizes: Vec<usize> = domains.iter().map(Vec::len).collect();
        let cells: usize = sizes.iter().product();
        let mut probs = vec![1.0; cells];
        let mut idx = vec![0usize; sizes.len()];
        for p in probs.iter_mut() {
            for (t, &v) in idx.iter().enumerate() {
                *p *= marginals[t].get(v).copied().unwrap_or(f64::NAN);
            }
            advance(&mut idx, &sizes);
        }
        Self::new(domains, probs)
    }

    pub fn n(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[Vec<f64>] {
        &self.domains
    }

    pub fn domain(&self, i: usize) -> &[f64] {
        &self.domains[i]
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.domains.iter().map(Vec::len).collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Position of `value` in the domain of tuple `i`.
    pub fn value_index(&self, i: usize, value: f64) -> Option<usize> {
        self.domains.get(i)?.iter().position(|v| *v == value)
    }

    /// Probability of one full cell, addressed by domain positions.
    pub fn cell(&self, idx: &[usize]) -> f64 {
        self.probs[self.flat_index(idx)]
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(PdpError::IndexOutOfRange { index: i, n: self.n() })
        }
    }

    fn check_assignment(&self, given: &Assignment) -> Result<()> {
        for (&k, &v) in given {
            self.check_index(k)?;
            if v >= self.domains[k].len() {
                return Err(PdpError::InvalidParameter(format!(
                    "value position {v} out of range for tuple {k}"
                )));
            }
        }
        Ok(())
    }

    /// Calls `f` for every cell with its domain positions and probability.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[usize], f64)) {
        let sizes = self.domain_sizes();
        let mut idx = vec![0usize; sizes.len()];
        for &p in &self.probs {
            f(&idx, p);
            advance(&mut idx, &sizes);
        }
    }

    /// Probability table over `axes` (in the order given), summing out the rest.
    pub(crate) fn marginal_table(&self, axes: &[usize]) -> Vec<f64> {
        let sizes: Vec<usize> = axes.iter().map(|&a| self.domains[a].len()).collect();
        let out_strides = strides_for(&sizes);
        let mut out = vec![0.0; sizes.iter().product()];
        self.for_each_cell(|idx, p| {
            if p > 0.0 {
                let k: usize = axes.iter().zip(&out_strides).map(|(&a, s)| idx[a] * s).sum();
                out[k] += p;
            }
        });
        out
    }

    /// Probability of the event `given`.
    pub fn event_probability(&self, given: &Assignment) -> Result<f64> {
        self.check_assignment(given)?;
        let mut total = 0.0;
        self.for_each_cell(|idx, p| {
            if given.iter().all(|(&k, &v)| idx[k] == v) {
                total += p;
            }
        });
        Ok(total)
    }

    /// Marginal distribution of the tuples in `subset`, in increasing index order.
    pub fn marginal(&self, subset: &[usize]) -> Result<JointDistribution> {
        let axes = sorted_unique(subset);
        if axes.is_empty() {
            return Err(PdpError::EmptySubset);
        }
        for &a in &axes {
            self.check_index(a)?;
        }
        let table = self.marginal_table(&axes);
        let total: f64 = table.iter().sum();
        let domains = axes.iter().map(|&a| self.domains[a].clone()).collect();
        Ok(Self::from_parts(domains, table.into_iter().map(|p| p / total).collect()))
    }

    /// Distribution of `targets` given the known values in `given`.
    pub fn conditional(&self, targets: &[usize], given: &Assignment) -> Result<ConditionalTable> {
        let targets = sorted_unique(targets);
        if targets.is_empty() {
            return Err(PdpError::EmptySubset);
        }
        for &t in &targets {
            self.check_index(t)?;
            if given.contains_key(&t) {
                return Err(PdpError::InvalidParameter(format!("tuple {t} is both a target and known")));
            }
        }
        self.check_assignment(given)?;
        let sizes: Vec<usize> = targets.iter().map(|&a| self.domains[a].len()).collect();
        let out_strides = strides_for(&sizes);
        let mut out = vec![0.0; sizes.iter().product()];
        let mut total = 0.0;
        self.for_each_cell(|idx, p| {
            if p > 0.0 && given.iter().all(|(&k, &v)| idx[k] == v) {
                let k: usize = targets.iter().zip(&out_strides).map(|(&a, s)| idx[a] * s).sum();
                out[k] += p;
                total += p;
            }
        });
        if total < PROB_EPS {
            return Err(PdpError::ImpossibleCondition);
        }
        out.iter_mut().for_each(|p| *p /= total);
        Ok(ConditionalTable {
            domains: targets.iter().map(|&a| self.domains[a].clone()).collect(),
            targets,
            given: given.clone(),
            probs: out,
        })
    }

    /// Conditional Pearson correlation of tuples `i` and `j` given `given`.
    pub fn pearson_corr(&self, i: usize, j: usize, given: &Assignment) -> Result<f64> {
        if i == j {
            return Err(PdpError::InvalidParameter("correlation needs two distinct tuples".into()));
        }
        let table = self.conditional(&[i, j], given)?;
        // targets are sorted, so find which axis is which
        let (ai, aj) = if i < j { (0, 1) } else { (1, 0) };
        let (di, dj) = (&table.domains[ai], &table.domains[aj]);
        let cols = table.domains[1].len();
        let at = |a: usize, b: usize| {
            let (r, c) = if ai == 0 { (a, b) } else { (b, a) };
            table.probs[r * cols + c]
        };
        let (mut ex, mut ey) = (0.0, 0.0);
        for a in 0..di.len() {
            for b in 0..dj.len() {
                let p = at(a, b);
                ex += p * di[a];
                ey += p * dj[b];
            }
        }
        let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
        for a in 0..di.len() {
            for b in 0..dj.len() {
                let p = at(a, b);
                let (dx, dy) = (di[a] - ex, dj[b] - ey);
                vx += p * dx * dx;
                vy += p * dy * dy;
                cov += p * dx * dy;
            }
        }
        if vx <= variance_floor(di) {
            return Err(PdpError::DegenerateVariable(i));
        }
        if vy <= variance_floor(dj) {
            return Err(PdpError::DegenerateVariable(j));
        }
        Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
    }

    /// Sign of the conditional correlation of two binary tuples, read off the
    /// cell probabilities: `p11/p1. > p21/p2.` means positive.
    pub fn corr_sign_2x2(&self, i: usize, j: usize, given: &Assignment) -> Result<CorrSign> {
        if i == j {
            return Err(PdpError::InvalidParameter("correlation needs two distinct tuples".into()));
        }
        self.check_index(i)?;
        self.check_index(j)?;
        for t in [i, j] {
            if self.domains[t].len() != 2 {
                return Err(PdpError::NonBinaryDomain(t));
            }
        }
        let table = self.conditional(&[i, j], given)?;
        let at = |a: usize, b: usize| if i < j { table.probs[a * 2 + b] } else { table.probs[b * 2 + a] };
        let (p11, p12, p21, p22) = (at(0, 0), at(0, 1), at(1, 0), at(1, 1));
        let (p1, p2) = (p11 + p12, p21 + p22);
        if p1 < PROB_EPS || p2 < PROB_EPS {
            return Err(PdpError::DegenerateVariable(i));
        }
        if p11 + p21 < PROB_EPS || p12 + p22 < PROB_EPS {
            return Err(PdpError::DegenerateVariable(j));
        }
        // p11/p1 - p21/p2, cross-multiplied
        let d = p11 * p2 - p21 * p1;
        Ok(if d > PROB_EPS {
            CorrSign::Positive
        } else if d < -PROB_EPS {
            CorrSign::Negative
        } else {
            CorrSign::Zero
        })
    }

    /// Rewrites a linear query as a sum query over `y_i = a_i * x_i`.
    ///
    /// Negative coefficients reverse the axis so domains stay increasing; a
    /// zero coefficient collapses the tuple to the single value 0.
    pub fn transform_linear_query(&self, query: &QuerySpec) -> Result<JointDistribution> {
        query.check_len(self.n())?;
        if query.is_sum() {
            return Ok(self.clone());
        }
        let a = query.coefficients();
        let domains: Vec<Vec<f64>> = self
            .domains
            .iter()
            .zip(a)
            .map(|(d, &c)| {
                if c > 0.0 {
                    d.iter().map(|v| c * v).collect()
                } else if c < 0.0 {
                    d.iter().rev().map(|v| c * v).collect()
                } else {
                    vec![0.0]
                }
            })
            .collect();
        let sizes: Vec<usize> = domains.iter().map(Vec::len).collect();
        let strides = strides_for(&sizes);
        let mut probs = vec![0.0; sizes.iter().product()];
        self.for_each_cell(|idx, p| {
            let k: usize = idx
                .iter()
                .enumerate()
                .map(|(t, &v)| {
                    let pos = if a[t] > 0.0 {
                        v
                    } else if a[t] < 0.0 {
                        self.domains[t].len() - 1 - v
                    } else {
                        0
                    };
                    pos * strides[t]
                })
                .sum();
            probs[k] += p;
        });
        Ok(Self::from_parts(domains, probs))
    }
}

fn variance_floor(domain: &[f64]) -> f64 {
    let width = domain[domain.len() - 1] - domain[0];
    1e-12 * width * width
}

/// Sign of a correlation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrSign {
    Negative,
    Zero,
    Positive,
}

impl CorrSign {
    pub fn of(x: f64, tol: f64) -> Self {
        if x > tol {
            CorrSign::Positive
        } else if x < -tol {
            CorrSign::Negative
        } else {
            CorrSign::Zero
        }
    }
}

/// Distribution of a set of target tuples under a fixed known assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub targets: Vec<usize>,
    pub given: Assignment,
    pub domains: Vec<Vec<f64>>,
    /// Row-major over the target domains, targets in increasing index order.
    pub probs: Vec<f64>,
}

impl ConditionalTable {
    pub fn prob(&self, idx: &[usize]) -> f64 {
        let strides = strides_for(&self.domains.iter().map(Vec::len).collect::<Vec<_>>());
        self.probs[idx.iter().zip(&strides).map(|(i, s)| i * s).sum::<usize>()]
    }
}

/// Coefficients of a linear query `f(x) = sum_i a_i x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    coefficients: Vec<f64>,
}

impl QuerySpec {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(PdpError::InvalidQuery("coefficients must be finite".into()));
        }
        if coefficients.iter().all(|c| *c == 0.0) {
            return Err(PdpError::InvalidQuery("at least one coefficient must be nonzero".into()));
        }
        Ok(Self { coefficients })
    }

    /// The plain sum query over `n` tuples.
    pub fn sum(n: usize) -> Self {
        Self { coefficients: vec![1.0; n] }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_sum(&self) -> bool {
        self.coefficients.iter().all(|c| *c == 1.0)
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.coefficients.len() == n {
            Ok(())
        } else {
            Err(PdpError::InvalidQuery(format!(
                "query has {} coefficients for {n} tuples",
                self.coefficients.len()
            )))
        }
    }
}

/// `LS_i(f) = |a_i| * (max dom(x_i) - min dom(x_i))`.
pub fn local_sensitivity(dist: &JointDistribution, query: &QuerySpec, i: usize) -> Result<f64> {
    query.check_len(dist.n())?;
    dist.check_index(i)?;
    let d = dist.domain(i);
    Ok(query.coefficients()[i].abs() * (d[d.len() - 1] - d[0]))
}

/// Query-scaled values `a_t * dom(x_t)` of every tuple, in domain order.
pub fn scaled_domains(dist: &JointDistribution, query: &QuerySpec) -> Result<Vec<Vec<f64>>> {
    query.check_len(dist.n())?;
    Ok(dist
        .domains()
        .iter()
        .zip(query.coefficients())
        .map(|(d, &a)| d.iter().map(|v| a * v).collect())
        .collect())
}

/// Largest local sensitivity over all tuples.
pub fn global_sensitivity(dist: &JointDistribution, query: &QuerySpec) -> Result<f64> {
    (0..dist.n()).try_fold(0.0f64, |acc, i| Ok(acc.max(local_sensitivity(dist, query, i)?)))
}

pub(crate) fn strides_for(sizes: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; sizes.len()];
    for k in (0..sizes.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * sizes[k + 1];
    }
    strides
}

/// Odometer increment, last axis fastest.
pub(crate) fn advance(idx: &mut [usize], sizes: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < sizes[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn sorted_unique(xs: &[usize]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::JointDistribution;

    // Tables are indexed [x1][x2].
    pub fn table(cells: [[f64; 2]; 2], d2: [f64; 2]) -> JointDistribution {
        JointDistribution::new(
            vec![vec![0.0, 1.0], d2.to_vec()],
            vec![cells[0][0], cells[0][1], cells[1][0], cells[1][1]],
        )
        .unwrap()
    }

    pub fn table_a() -> JointDistribution {
        table([[0.3, 0.2], [0.2, 0.3]], [0.0, 1.0])
    }
    pub fn table_b() -> JointDistribution {
        table([[0.2, 0.3], [0.3, 0.2]], [0.0, 1.0])
    }
    pub fn table_c() -> JointDistribution {
        table([[0.5, 0.0], [0.0, 0.5]], [0.0, 1.0])
    }
    pub fn table_d() -> JointDistribution {
        table([[0.5, 0.0], [0.0, 0.5]], [0.0, 5.0])
    }
}
