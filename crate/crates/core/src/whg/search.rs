use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::edge::{edge_value, first_layer, GammaMode};
use super::node::{AdversaryNode, MAX_TUPLES};
use super::{AssignmentMode, EdgeRecord, SearchOptions, WeightedHierGraph};
use crate::discrete::{scaled_domains, strides_for, JointDistribution, QuerySpec, PROB_EPS};
use crate::error::{PdpError, Result};
use crate::numeric::weighted_log_sum_exp;
use crate::report::{Algorithm, LeakageReport};

/// One outgoing edge of a node: forgetting `removed` gives an ancestor with `leakage`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion {
    pub removed: usize,
    pub ic: f64,
    pub leakage: f64,
}

/// Supplies the first layer and the edges of a graph.
pub trait EdgeSource: Sync {
    fn n(&self) -> usize;
    fn first_layer(&self) -> Result<Vec<(AdversaryNode, f64)>>;
    /// Outgoing edges of `child`, whose leakage is `l`, in increasing `removed` order.
    fn expand(&self, child: AdversaryNode, l: f64) -> Result<Vec<Expansion>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchKind {
    Full,
    /// Expand only the `min(n, count)` largest nodes of each layer.
    Fast,
}

/// Edges computed from a discrete joint distribution.
///
/// A linear query is handled as a sum over `y_t = a_t x_t`: the table is
/// kept as is (so knowing a tuple with `a_t = 0` still conditions the
/// others) and only the values entering the Laplace terms are scaled.
pub struct DiscreteEdges {
    dist: JointDistribution,
    /// `a_t * dom(x_t)`, per tuple, in domain order.
    scaled: Vec<Vec<f64>>,
    /// Domain positions of each tuple sorted by scaled value.
    order: Vec<Vec<usize>>,
    first: Vec<f64>,
    lambda: f64,
    gamma: GammaMode,
    assignment: AssignmentMode,
}

impl DiscreteEdges {
    pub fn new(dist: &JointDistribution, query: &QuerySpec, lambda: f64, opts: &SearchOptions) -> Result<Self> {
        let first = first_layer(dist, query, lambda)?.into_iter().map(|x| x.1).collect();
        let scaled = scaled_domains(dist, query)?;
        let order = scaled
            .iter()
            .map(|d| {
                let mut o: Vec<usize> = (0..d.len()).collect();
                o.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
                o
            })
            .collect();
        if let AssignmentMode::Fixed(v) = &opts.assignment {
            if v.len() != dist.n() {
                return Err(PdpError::InvalidParameter(format!(
                    "fixed assignment has {} values for {} tuples",
                    v.len(),
                    dist.n()
                )));
            }
            for (t, &p) in v.iter().enumerate() {
                if p >= dist.domain(t).len() {
                    return Err(PdpError::InvalidParameter(format!("value position {p} out of range for tuple {t}")));
                }
            }
        }
        Ok(Self {
            dist: dist.clone(),
            scaled,
            order,
            first,
            lambda,
            gamma: opts.gamma,
            assignment: opts.assignment.clone(),
        })
    }

    pub fn distribution(&self) -> &JointDistribution {
        &self.dist
    }

    /// Increments for one context: `row_m`, `row_n` are the unnormalized
    /// probabilities of `x_j` jointly with `x_i = m` (resp. `n`) and the context.
    fn push_gammas(&self, row_m: &[f64], row_n: &[f64], yj: &[f64], out: &mut Vec<f64>) {
        let tm: f64 = row_m.iter().sum();
        let tn: f64 = row_n.iter().sum();
        if tm < PROB_EPS || tn < PROB_EPS {
            return;
        }
        let lo: Vec<f64> = yj.iter().map(|y| -y / self.lambda).collect();
        let norm = tn.ln() - tm.ln();
        out.push(weighted_log_sum_exp(row_m, &lo) - weighted_log_sum_exp(row_n, &lo) + norm);
        if self.gamma == GammaMode::BothTails {
            let hi: Vec<f64> = yj.iter().map(|y| y / self.lambda).collect();
            out.push(weighted_log_sum_exp(row_n, &hi) - weighted_log_sum_exp(row_m, &hi) - norm);
        }
    }
}

impl EdgeSource for DiscreteEdges {
    fn n(&self) -> usize {
        self.dist.n()
    }

    fn first_layer(&self) -> Result<Vec<(AdversaryNode, f64)>> {
        let n = self.dist.n();
        Ok((0..n).map(|i| (AdversaryNode::strongest(n, i), self.first[i])).collect())
    }

    fn expand(&self, child: AdversaryNode, l: f64) -> Result<Vec<Expansion>> {
        let i = child.attack;
        let known = child.prior_indices();
        let mut axes = known.clone();
        axes.push(i);
        axes.sort_unstable();
        let table = self.dist.marginal_table(&axes);
        let sizes: Vec<usize> = axes.iter().map(|&a| self.dist.domain(a).len()).collect();
        let pos_i = axes.iter().position(|&a| a == i).expect("attack axis present");
        let si = sizes[pos_i];
        let mut out = Vec::with_capacity(known.len());
        for &j in &known {
            let pos_j = axes.iter().position(|&a| a == j).expect("removed axis present");
            let sj = sizes[pos_j];
            let yj = &self.scaled[j];
            // context axes are the remaining known tuples
            let ctx_axes: Vec<usize> = (0..axes.len()).filter(|&p| p != pos_i && p != pos_j).collect();
            let ctx_sizes: Vec<usize> = ctx_axes.iter().map(|&p| sizes[p]).collect();
            let ctx_strides = strides_for(&ctx_sizes);
            let n_ctx: usize = ctx_sizes.iter().product();
            let fixed_ctx: Option<usize> = match &self.assignment {
                AssignmentMode::WorstCase => None,
                AssignmentMode::Fixed(v) => {
                    Some(ctx_axes.iter().zip(&ctx_strides).map(|(&p, s)| v[axes[p]] * s).sum())
                }
            };
            let mut buckets = vec![0.0; n_ctx * si * sj];
            let mut idx = vec![0usize; axes.len()];
            for &p in &table {
                if p > 0.0 {
                    let c: usize = ctx_axes.iter().zip(&ctx_strides).map(|(&a, s)| idx[a] * s).sum();
                    buckets[(c * si + idx[pos_i]) * sj + idx[pos_j]] += p;
                }
                crate::discrete::advance(&mut idx, &sizes);
            }
            let mut best: Option<(f64, f64)> = None;
            let mut gammas = Vec::new();
            for c in 0..n_ctx {
                if fixed_ctx.is_some_and(|f| f != c) {
                    continue;
                }
                gammas.clear();
                let block = &buckets[c * si * sj..(c + 1) * si * sj];
                let ord = &self.order[i];
                for (k, &m) in ord.iter().enumerate() {
                    for &nn in &ord[k + 1..] {
                        self.push_gammas(&block[m * sj..(m + 1) * sj], &block[nn * sj..(nn + 1) * sj], yj, &mut gammas);
                    }
                }
                if gammas.is_empty() {
                    continue;
                }
                let g = edge_value(l, &gammas)?;
                let v = (l + g).abs();
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, g));
                }
            }
            let (leakage, ic) = best.unwrap_or((l, 0.0));
            out.push(Expansion { removed: j, ic, leakage });
        }
        Ok(out)
    }
}

/// Full-space search (every node of every layer) over a discrete distribution.
pub fn full_space_search(
    dist: &JointDistribution,
    query: &QuerySpec,
    lambda: f64,
    opts: &SearchOptions,
) -> Result<(WeightedHierGraph, LeakageReport)> {
    let src = DiscreteEdges::new(dist, query, lambda, opts)?;
    let (g, r) = search_source(&src, SearchKind::Full, opts)?;
    Ok((g, annotate(r, opts)))
}

/// Fast search keeping the `min(n, count)` largest nodes of each layer.
pub fn fast_search(
    dist: &JointDistribution,
    query: &QuerySpec,
    lambda: f64,
    opts: &SearchOptions,
) -> Result<(WeightedHierGraph, LeakageReport)> {
    let src = DiscreteEdges::new(dist, query, lambda, opts)?;
    let (g, r) = search_source(&src, SearchKind::Fast, opts)?;
    Ok((g, annotate(r, opts)))
}

fn annotate(r: LeakageReport, opts: &SearchOptions) -> LeakageReport {
    let gamma = match opts.gamma {
        GammaMode::LowerTail => "gamma: value pairs m<n, lower-tail increment only",
        GammaMode::BothTails => "gamma: value pairs m<n, lower- and upper-tail increments",
    };
    let assignment = match &opts.assignment {
        AssignmentMode::WorstCase => "known values: worst case over positive-probability assignments".to_string(),
        AssignmentMode::Fixed(v) => format!("known values: fixed positions {v:?}"),
    };
    r.with_note(gamma).with_note(assignment)
}

/// Layer-synchronous search over any edge source.
///
/// Parents are expanded in parallel; children are merged sequentially in
/// parent order, keeping the minimum value per node, so the result does not
/// depend on the thread count.
pub fn search_source<S: EdgeSource>(
    src: &S,
    kind: SearchKind,
    opts: &SearchOptions,
) -> Result<(WeightedHierGraph, LeakageReport)> {
    let start = Instant::now();
    let n = src.n();
    if n == 0 {
        return Err(PdpError::InvalidParameter("no tuples".into()));
    }
    if n > MAX_TUPLES {
        return Err(PdpError::SizeCap {
            what: "tuples in a node bitmask",
            n,
            cap: MAX_TUPLES,
            estimate: n as f64 * 2f64.powi(n as i32 - 1),
        });
    }
    if kind == SearchKind::Full && n > opts.cap && !opts.force {
        return Err(PdpError::SizeCap {
            what: "full-space search",
            n,
            cap: opts.cap,
            estimate: n as f64 * 2f64.powi(n as i32 - 1),
        });
    }
    let mut layer = src.first_layer()?;
    layer.sort_by_key(|x| x.0);
    let mut layers = vec![layer];
    let mut edges = Vec::new();
    for _ in 2..=n {
        let current = layers.last().expect("at least one layer");
        let frontier: Vec<(AdversaryNode, f64)> = match kind {
            SearchKind::Full => current.clone(),
            SearchKind::Fast => {
                let mut v = current.clone();
                v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                v.truncate(n.min(v.len()));
                v
            }
        };
        let expansions: Vec<Vec<Expansion>> = frontier
            .par_iter()
            .map(|&(node, l)| src.expand(node, l))
            .collect::<Result<_>>()?;
        let mut next: BTreeMap<AdversaryNode, f64> = BTreeMap::new();
        for (&(node, _), exps) in frontier.iter().zip(&expansions) {
            for e in exps {
                let anc = node.without(e.removed);
                next.entry(anc).and_modify(|v| *v = v.min(e.leakage)).or_insert(e.leakage);
                if opts.keep_edges {
                    edges.push(EdgeRecord { child: node, removed: e.removed, ic: e.ic });
                }
            }
        }
        layers.push(next.into_iter().collect());
    }
    let algorithm = match kind {
        SearchKind::Full => Algorithm::Full,
        SearchKind::Fast => Algorithm::Fast,
    };
    let report = LeakageReport::from_layers(
        algorithm,
        n,
        layers.iter().map(Vec::as_slice),
        start.elapsed().as_secs_f64(),
    );
    Ok((WeightedHierGraph { n, layers, edges }, report))
}
