use serde::{Deserialize, Serialize};

use crate::whg::NodeKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Full,
    Fast,
    ClosedForm,
    Oracle,
}

/// Result of a leakage analysis over a set of adversaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub algorithm: Algorithm,
    pub n: usize,
    /// Maximum leakage per layer; entry `k - 1` is layer `k`.
    pub layer_max: Vec<f64>,
    pub leakage: f64,
    pub argmax: NodeKey,
    pub argmax_layer: usize,
    pub node_count: usize,
    pub elapsed_secs: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invocation: Option<Vec<String>>,
}

impl LeakageReport {
    /// Builds a report from per-layer `(node, leakage)` lists.
    ///
    /// The argmax is the first strict maximum scanning layers in order and
    /// nodes in the given order, so reports are reproducible.
    pub fn from_layers<'a, I>(algorithm: Algorithm, n: usize, layers: I, elapsed_secs: f64) -> Self
    where
        I: IntoIterator<Item = &'a [(crate::whg::AdversaryNode, f64)]>,
    {
        let mut layer_max = Vec::new();
        let mut best: Option<(crate::whg::AdversaryNode, f64, usize)> = None;
        let mut node_count = 0;
        for (k, layer) in layers.into_iter().enumerate() {
            let mut m = f64::NEG_INFINITY;
            for &(node, l) in layer {
                node_count += 1;
                m = m.max(l);
                if best.is_none_or(|(_, b, _)| l > b) {
                    best = Some((node, l, k + 1));
                }
            }
            layer_max.push(m);
        }
        let (node, leakage, argmax_layer) = best.expect("report needs at least one node");
        Self {
            algorithm,
            n,
            layer_max,
            leakage,
            argmax: node.into(),
            argmax_layer,
            node_count,
            elapsed_secs,
            notes: Vec::new(),
            invocation: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}
