use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::node::{full_mask, AdversaryNode, NodeKey, MAX_TUPLES};
use super::search::{EdgeSource, Expansion};
use super::edge::ancestor_leakage;
use crate::error::{PdpError, Result};

/// How the increment on edge `(i, K, j)` is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeRule {
    /// Explicit values keyed by `(attack, prior mask, removed)`; missing edges are 0.
    Table(HashMap<(usize, u32, usize), f64>),
    Constant(f64),
    /// `sign * scale * Beta(alpha, beta)`, drawn from a stream seeded by
    /// `(seed, i, K, j)` so every edge has a fixed value independent of
    /// visiting order.
    Beta { alpha: f64, beta: f64, sign: f64, scale: f64, seed: u64 },
}

/// A graph given directly by its first layer and edge values.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWhg {
    pub n: usize,
    pub first: Vec<f64>,
    pub rule: EdgeRule,
}

#[derive(Serialize, Deserialize)]
struct EdgeEntry {
    node: NodeKey,
    remove: usize,
    ic: f64,
}

#[derive(Serialize, Deserialize)]
struct SyntheticJson {
    n: usize,
    first_layer: Vec<f64>,
    edges: Vec<EdgeEntry>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SyntheticWhg {
    pub fn new(n: usize, first: Vec<f64>, rule: EdgeRule) -> Result<Self> {
        if n == 0 || n > MAX_TUPLES {
            return Err(PdpError::InvalidParameter(format!("synthetic graph needs 1..={MAX_TUPLES} tuples, got {n}")));
        }
        if first.len() != n {
            return Err(PdpError::InvalidParameter(format!("{} first-layer values for {n} tuples", first.len())));
        }
        if first.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PdpError::InvalidParameter("first-layer values must be finite and non-negative".into()));
        }
        if let EdgeRule::Beta { alpha, beta, .. } = rule {
            Beta::new(alpha, beta).map_err(|e| PdpError::InvalidParameter(format!("beta parameters: {e}")))?;
        }
        Ok(Self { n, first, rule })
    }

    pub fn constant(n: usize, first: f64, ic: f64) -> Result<Self> {
        Self::new(n, vec![first; n], EdgeRule::Constant(ic))
    }

    /// Increment on the edge from `child` that forgets `j`.
    pub fn edge(&self, child: AdversaryNode, j: usize) -> f64 {
        match &self.rule {
            EdgeRule::Table(t) => t.get(&(child.attack, child.prior, j)).copied().unwrap_or(0.0),
            EdgeRule::Constant(c) => *c,
            EdgeRule::Beta { alpha, beta, sign, scale, seed } => {
                let key = splitmix(splitmix(splitmix(*seed ^ child.attack as u64) ^ child.prior as u64) ^ j as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                let b = Beta::new(*alpha, *beta).expect("validated at construction");
                sign * scale * b.sample(&mut rng)
            }
        }
    }

    /// Every edge of the complete graph, in node order then removal order.
    pub fn materialize(&self) -> Vec<(AdversaryNode, usize, f64)> {
        let mut out = Vec::new();
        let all = full_mask(self.n);
        for i in 0..self.n {
            let others = all & !(1 << i);
            // every subset of `others`
            let mut sub = others;
            loop {
                let node = AdversaryNode { attack: i, prior: sub };
                for j in node.prior_indices() {
                    out.push((node, j, self.edge(node, j)));
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & others;
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edges = self
            .materialize()
            .into_iter()
            .map(|(node, remove, ic)| EdgeEntry { node: node.into(), remove, ic })
            .collect();
        serde_json::to_value(SyntheticJson { n: self.n, first_layer: self.first.clone(), edges }).expect("serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let s: SyntheticJson = serde_json::from_value(v.clone())?;
        let mut table = HashMap::new();
        for e in s.edges {
            if e.node.0 >= s.n || e.node.1.iter().any(|&k| k >= s.n) || e.remove >= s.n {
                return Err(PdpError::InvalidParameter(format!("edge index out of range for {} tuples", s.n)));
            }
            let node = AdversaryNode::from(&e.node);
            if !node.knows(e.remove) {
                return Err(PdpError::InvalidParameter(format!(
                    "edge removes tuple {} that node {node} does not know",
                    e.remove
                )));
            }
            if !e.ic.is_finite() {
                return Err(PdpError::InvalidParameter(format!("edge value on {node} is not finite")));
            }
            table.insert((node.attack, node.prior, e.remove), e.ic);
        }
        Self::new(s.n, s.first_layer, EdgeRule::Table(table))
    }
}

impl EdgeSource for SyntheticWhg {
    fn n(&self) -> usize {
        self.n
    }

    fn first_layer(&self) -> Result<Vec<(AdversaryNode, f64)>> {
        Ok((0..self.n).map(|i| (AdversaryNode::strongest(self.n, i), self.first[i])).collect())
    }

    fn expand(&self, child: AdversaryNode, l: f64) -> Result<Vec<Expansion>> {
        Ok(child
            .prior_indices()
            .into_iter()
            .map(|j| {
                let ic = self.edge(child, j);
                Expansion { removed: j, ic, leakage: ancestor_leakage(l, ic) }
            })
            .collect())
    }
}
