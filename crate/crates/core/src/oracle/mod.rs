//! Brute-force leakage straight from the definition.
//!
//! Given `x_i` and the known `x_K`, the output density is a mixture over the
//! unknown tuples of Laplace densities centred at the query sums. Between two
//! adjacent centres each mixture is `A e^{-r/lambda} + B e^{r/lambda}`, so the
//! log-ratio of two mixtures is monotone there and its supremum over `r` is
//! attained at a centre or in one of the limits `r -> -inf`, `r -> +inf`.

mod gaussian;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gaussian::{pdp_numeric_gaussian, DEFAULT_GRID_POINTS};

use crate::discrete::{advance, scaled_domains, strides_for, Assignment, JointDistribution, QuerySpec, PROB_EPS};
use crate::error::{PdpError, Result};
use crate::numeric::weighted_log_sum_exp;

/// Output value at which a log-ratio is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputPoint {
    NegInf,
    Finite(f64),
    PosInf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleArgmax {
    pub x_i: f64,
    pub x_i_alt: f64,
    pub r: OutputPoint,
    /// Domain positions of the known tuples.
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub leakage: f64,
    /// `None` when no context admits two distinct values of `x_i`.
    pub argmax: Option<OracleArgmax>,
    /// Number of finite output points evaluated.
    pub kinks: usize,
}

/// Normalized mixture: sorted distinct centres with their weights.
#[derive(Debug, Clone)]
struct Mixture {
    centres: Vec<f64>,
    weights: Vec<f64>,
}

impl Mixture {
    fn from_components(mut comps: Vec<(f64, f64)>) -> Option<Self> {
        comps.retain(|c| c.1 > 0.0);
        let total: f64 = comps.iter().map(|c| c.1).sum();
        if total < PROB_EPS {
            return None;
        }
        comps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut centres: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (s, w) in comps {
            match centres.last() {
                Some(&last) if (s - last).abs() <= 1e-12 * (1.0 + s.abs()) => *weights.last_mut().expect("paired") += w,
                _ => {
                    centres.push(s);
                    weights.push(w);
                }
            }
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Some(Self { centres, weights })
    }

    /// `log` of the mixture density at `r`, up to the common factor `1 / (2 lambda)`.
    fn log_density(&self, r: f64, lambda: f64) -> f64 {
        let xs: Vec<f64> = self.centres.iter().map(|s| -(r - s).abs() / lambda).collect();
        weighted_log_sum_exp(&self.weights, &xs)
    }

    /// `log E[e^{sign * s / lambda}]`, the tail behaviour as `r -> -sign * inf`.
    fn log_tail(&self, sign: f64, lambda: f64) -> f64 {
        let xs: Vec<f64> = self.centres.iter().map(|s| sign * s / lambda).collect();
        weighted_log_sum_exp(&self.weights, &xs)
    }
}

/// `sup_r log p_a(r) / p_b(r)` with the maximizing point.
fn sup_log_ratio(a: &Mixture, b: &Mixture, lambda: f64) -> (f64, OutputPoint, usize) {
    // r -> -inf: densities behave like e^{r/lambda} E[e^{-s/lambda}]
    let mut best = (a.log_tail(-1.0, lambda) - b.log_tail(-1.0, lambda), OutputPoint::NegInf);
    let mut kinks: Vec<f64> = a.centres.iter().chain(&b.centres).copied().collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    for &r in &kinks {
        let v = a.log_density(r, lambda) - b.log_density(r, lambda);
        if v > best.0 {
            best = (v, OutputPoint::Finite(r));
        }
    }
    let hi = a.log_tail(1.0, lambda) - b.log_tail(1.0, lambda);
    if hi > best.0 {
        best = (hi, OutputPoint::PosInf);
    }
    (best.0, best.1, kinks.len())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(PdpError::InvalidParameter(format!("lambda must be positive, got {lambda}")))
    }
}

fn known_set(dist: &JointDistribution, i: usize, k: &[usize]) -> Result<Vec<usize>> {
    dist.check_index(i)?;
    let mut known: Vec<usize> = Vec::with_capacity(k.len());
    for &t in k {
        dist.check_index(t)?;
        if t != i {
            known.push(t);
        }
    }
    known.sort_unstable();
    known.dedup();
    Ok(known)
}

/// Per known-context mixtures of the output given each value of `x_i`.
struct Contexts {
    known: Vec<usize>,
    known_sizes: Vec<usize>,
    /// `mixtures[ctx][x_i]`
    mixtures: Vec<Vec<Option<Mixture>>>,
}

fn build_contexts(dist: &JointDistribution, query: &QuerySpec, i: usize, known: Vec<usize>) -> Result<Contexts> {
    let scaled = scaled_domains(dist, query)?;
    let known_sizes: Vec<usize> = known.iter().map(|&k| dist.domain(k).len()).collect();
    let known_strides = strides_for(&known_sizes);
    let n_ctx: usize = known_sizes.iter().product();
    let si = dist.domain(i).len();
    let mut comps: Vec<Vec<Vec<(f64, f64)>>> = vec![vec![Vec::new(); si]; n_ctx];
    dist.for_each_cell(|idx, p| {
        if p > 0.0 {
            let c: usize = known.iter().zip(&known_strides).map(|(&k, s)| idx[k] * s).sum();
            let sum: f64 = idx.iter().enumerate().map(|(t, &v)| scaled[t][v]).sum();
            comps[c][idx[i]].push((sum, p));
        }
    });
    let mixtures = comps
        .into_iter()
        .map(|per_x| {
            let ctx_total: f64 = per_x.iter().flatten().map(|c| c.1).sum();
            if ctx_total < PROB_EPS {
                return vec![None; si];
            }
            per_x.into_iter().map(Mixture::from_components).collect()
        })
        .collect();
    Ok(Contexts { known, known_sizes, mixtures })
}

/// Exact leakage of adversary `A(i, K)`: the supremum over output values,
/// pairs of values of `x_i` and positive-probability assignments of `x_K`.
pub fn pdp_exact_discrete(
    dist: &JointDistribution,
    query: &QuerySpec,
    lambda: f64,
    i: usize,
    k: &[usize],
) -> Result<OracleResult> {
    check_lambda(lambda)?;
    let known = known_set(dist, i, k)?;
    let ctxs = build_contexts(dist, query, i, known)?;
    let per_ctx: Vec<(f64, Option<(usize, usize, OutputPoint)>, usize)> = ctxs
        .mixtures
        .par_iter()
        .map(|mix| {
            let mut best: (f64, Option<(usize, usize, OutputPoint)>, usize) = (0.0, None, 0);
            for (a, ma) in mix.iter().enumerate() {
                let Some(ma) = ma else { continue };
                for (b, mb) in mix.iter().enumerate() {
                    let Some(mb) = mb else { continue };
                    if a == b {
                        continue;
                    }
                    let (v, r, kinks) = sup_log_ratio(ma, mb, lambda);
                    best.2 += kinks;
                    if best.1.is_none() || v > best.0 {
                        best.0 = v.max(0.0);
                        best.1 = Some((a, b, r));
                    }
                }
            }
            best
        })
        .collect();
    let mut leakage = 0.0;
    let mut argmax = None;
    let mut kinks = 0;
    let dom = dist.domain(i);
    for (c, (v, arg, kc)) in per_ctx.into_iter().enumerate() {
        kinks += kc;
        if let Some((a, b, r)) = arg {
            if argmax.is_none() || v > leakage {
                leakage = v;
                let mut pos = vec![0usize; ctxs.known.len()];
                let strides = strides_for(&ctxs.known_sizes);
                for (d, s) in strides.iter().enumerate() {
                    pos[d] = (c / s) % ctxs.known_sizes[d];
                }
                argmax = Some(OracleArgmax {
                    x_i: dom[a],
                    x_i_alt: dom[b],
                    r,
                    assignment: ctxs.known.iter().copied().zip(pos).collect(),
                });
            }
        }
    }
    Ok(OracleResult { leakage, argmax, kinks })
}

/// `log Pr(r | x_i = a, x_K) / Pr(r | x_i = b, x_K)` at a finite output `r`.
/// `a`, `b` and the values in `given` are domain positions.
pub fn pdp_log_ratio(
    dist: &JointDistribution,
    query: &QuerySpec,
    lambda: f64,
    i: usize,
    given: &Assignment,
    (a, b): (usize, usize),
    r: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let known = known_set(dist, i, &given.keys().copied().collect::<Vec<_>>())?;
    let ctxs = build_contexts(dist, query, i, known)?;
    let strides = strides_for(&ctxs.known_sizes);
    let mut c = 0;
    for (d, k) in ctxs.known.iter().enumerate() {
        let v = given[k];
        if v >= ctxs.known_sizes[d] {
            return Err(PdpError::InvalidParameter(format!("value position {v} out of range for tuple {k}")));
        }
        c += v * strides[d];
    }
    let mix = &ctxs.mixtures[c];
    let get = |x: usize| mix.get(x).and_then(Option::as_ref).ok_or(PdpError::ImpossibleCondition);
    Ok(get(a)?.log_density(r, lambda) - get(b)?.log_density(r, lambda))
}

/// Posterior log-odds of `x_i = a` against `x_i = b` after seeing `r`, minus
/// the prior log-odds, both conditioned on `given`.
///
/// Computed from the joint density `Pr(r, x)` summed over the table, a
/// different route from [`pdp_log_ratio`] to the same number.
pub fn bayesian_gain(
    dist: &JointDistribution,
    query: &QuerySpec,
    lambda: f64,
    i: usize,
    given: &Assignment,
    (a, b): (usize, usize),
    r: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let scaled = scaled_domains(dist, query)?;
    if given.contains_key(&i) {
        return Err(PdpError::InvalidParameter(format!("tuple {i} is both attacked and known")));
    }
    let mut prior_a = 0.0;
    let mut prior_b = 0.0;
    let (mut wa, mut xa, mut wb, mut xb) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    dist.for_each_cell(|idx, p| {
        if p <= 0.0 || !given.iter().all(|(&k, &v)| idx[k] == v) {
            return;
        }
        let f: f64 = idx.iter().enumerate().map(|(t, &v)| scaled[t][v]).sum();
        if idx[i] == a {
            prior_a += p;
            wa.push(p);
            xa.push(-(r - f).abs() / lambda);
        } else if idx[i] == b {
            prior_b += p;
            wb.push(p);
            xb.push(-(r - f).abs() / lambda);
        }
    });
    if prior_a < PROB_EPS || prior_b < PROB_EPS {
        return Err(PdpError::ImpossibleCondition);
    }
    let posterior = weighted_log_sum_exp(&wa, &xa) - weighted_log_sum_exp(&wb, &xb);
    Ok(posterior - (prior_a.ln() - prior_b.ln()))
}

/// Leakage of the Laplace mechanism under plain differential privacy:
/// the largest change of the query from changing one tuple, over `lambda`.
pub fn dp_exact(dist: &JointDistribution, query: &QuerySpec, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    (0..dist.n()).try_fold(0.0f64, |acc, t| Ok(acc.max(dp_group_exact(dist, query, lambda, &[t])?)))
}

/// Group version: all tuples in `group` may change at once.
pub fn dp_group_exact(dist: &JointDistribution, query: &QuerySpec, lambda: f64, group: &[usize]) -> Result<f64> {
    check_lambda(lambda)?;
    let scaled = scaled_domains(dist, query)?;
    let mut g = group.to_vec();
    g.sort_unstable();
    g.dedup();
    for &t in &g {
        dist.check_index(t)?;
    }
    // brute force over both assignments of the group
    let sizes: Vec<usize> = g.iter().map(|&t| scaled[t].len()).collect();
    let count: usize = sizes.iter().product();
    let sums: Vec<f64> = {
        let mut idx = vec![0usize; g.len()];
        (0..count)
            .map(|_| {
                let s = g.iter().zip(&idx).map(|(&t, &v)| scaled[t][v]).sum();
                advance(&mut idx, &sizes);
                s
            })
            .collect()
    };
    let mut best = 0.0f64;
    for &x in &sums {
        for &y in &sums {
            best = best.max((x - y).abs());
        }
    }
    Ok(best / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::fixtures::*;

    fn sum2() -> QuerySpec {
        QuerySpec::sum(2)
    }

    #[test]
    fn worked_examples() {
        let strong = pdp_exact_discrete(&table_a(), &sum2(), 1.0, 0, &[1]).unwrap();
        assert!((strong.leakage - 1.0).abs() < 1e-12);
        let weak = pdp_exact_discrete(&table_a(), &sum2(), 1.0, 0, &[]).unwrap();
        assert!((weak.leakage - 1.185_375_903_250_729_5).abs() < 1e-12);
        assert!(matches!(weak.argmax.as_ref().unwrap().r, OutputPoint::NegInf | OutputPoint::Finite(_)));
        let c = pdp_exact_discrete(&table_c(), &sum2(), 1.0, 0, &[]).unwrap();
        assert!((c.leakage - 2.0).abs() < 1e-12);
        let d = pdp_exact_discrete(&table_d(), &sum2(), 1.0, 0, &[]).unwrap();
        assert!((d.leakage - 6.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_contexts_are_skipped() {
        // under table (c) knowing x2 pins x1, so no pair of x1 values is possible
        let r = pdp_exact_discrete(&table_c(), &sum2(), 1.0, 0, &[1]).unwrap();
        assert_eq!(r.leakage, 0.0);
        assert!(r.argmax.is_none());
    }

    #[test]
    fn independence_makes_prior_irrelevant() {
        let d = JointDistribution::product(
            vec![vec![0.0, 1.0, 2.0], vec![0.0, 2.0], vec![-1.0, 1.0]],
            &[vec![0.2, 0.3, 0.5], vec![0.6, 0.4], vec![0.3, 0.7]],
        )
        .unwrap();
        let q = QuerySpec::sum(3);
        let base = pdp_exact_discrete(&d, &q, 0.8, 0, &[]).unwrap().leakage;
        assert!((base - 2.0 / 0.8).abs() < 1e-12);
        for k in [vec![1], vec![2], vec![1, 2]] {
            assert!((pdp_exact_discrete(&d, &q, 0.8, 0, &k).unwrap().leakage - base).abs() < 1e-12);
        }
    }

    #[test]
    fn dp_values() {
        assert_eq!(dp_exact(&table_a(), &sum2(), 1.0).unwrap(), 1.0);
        assert_eq!(dp_exact(&table_b(), &sum2(), 0.5).unwrap(), 2.0);
        assert_eq!(dp_group_exact(&table_a(), &sum2(), 1.0, &[0, 1]).unwrap(), 2.0);
        assert_eq!(dp_exact(&table_d(), &sum2(), 1.0).unwrap(), 5.0);
    }

    #[test]
    fn gain_equals_log_ratio() {
        let given = Assignment::new();
        for r in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            let lr = pdp_log_ratio(&table_a(), &sum2(), 1.0, 0, &given, (0, 1), r).unwrap();
            let g = bayesian_gain(&table_a(), &sum2(), 1.0, 0, &given, (0, 1), r).unwrap();
            assert!((lr - g).abs() < 1e-12);
        }
        let flat = bayesian_gain(&table_a(), &sum2(), 1e6, 0, &given, (0, 1), 0.5).unwrap();
        assert!(flat.abs() < 1e-5);
    }

    #[test]
    fn negative_coefficient_mirrors() {
        let q = QuerySpec::new(vec![1.0, -1.0]).unwrap();
        let r = pdp_exact_discrete(&table_b(), &q, 1.0, 0, &[]).unwrap();
        let s = pdp_exact_discrete(&table_a(), &sum2(), 1.0, 0, &[]).unwrap();
        // flipping x2 turns table (b) into table (a)
        assert!((r.leakage - s.leakage).abs() < 1e-12);
    }
}
