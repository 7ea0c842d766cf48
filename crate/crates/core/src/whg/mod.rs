//! Weighted hierarchical graph of adversaries.
//!
//! Layer `k` holds the adversaries that know `n - k` other tuples. Node
//! values are leakages, edges carry the increment applied when one known
//! tuple is forgotten.

mod edge;
mod node;
mod search;
mod synthetic;

use serde::{Deserialize, Serialize};

pub use edge::{
    ancestor_leakage, chain_rule_path, edge_value, first_layer, gamma_set, ic_pair, ic_pair_upper, ir_value,
    GammaMode,
};
pub use node::{full_mask, mask_indices, AdversaryNode, NodeKey, MAX_TUPLES};
pub use search::{
    fast_search, full_space_search, search_source, DiscreteEdges, EdgeSource, Expansion, SearchKind,
};
pub use synthetic::{EdgeRule, SyntheticWhg};

/// Default largest `n` accepted by the full-space search without `force`.
pub const DEFAULT_FULL_CAP: usize = 18;

/// Which values of the known tuples a node's leakage is evaluated at.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentMode {
    /// Maximum over every positive-probability assignment of the known tuples.
    #[default]
    WorstCase,
    /// One designated value (domain position) per tuple; only the known ones are used.
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub cap: usize,
    pub force: bool,
    pub gamma: GammaMode,
    pub assignment: AssignmentMode,
    pub keep_edges: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_FULL_CAP,
            force: false,
            gamma: GammaMode::LowerTail,
            assignment: AssignmentMode::WorstCase,
            keep_edges: false,
        }
    }
}

/// Edge from `child` to the ancestor that forgot tuple `removed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRecord {
    pub child: AdversaryNode,
    pub removed: usize,
    pub ic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHierGraph {
    pub n: usize,
    /// `layers[k - 1]` is layer `k`, sorted by node.
    pub layers: Vec<Vec<(AdversaryNode, f64)>>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    layer: usize,
    node: NodeKey,
    leakage: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    node: NodeKey,
    remove: usize,
    ic: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    layers: Vec<NodeJson>,
    edges: Vec<EdgeJson>,
}

impl WeightedHierGraph {
    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn leakage_of(&self, node: &AdversaryNode) -> Option<f64> {
        let layer = self.layers.get(node.layer(self.n).checked_sub(1)?)?;
        layer.binary_search_by(|(m, _)| m.cmp(node)).ok().map(|k| layer[k].1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &(AdversaryNode, f64)> {
        self.layers.iter().flatten()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let g = GraphJson {
            layers: self
                .layers
                .iter()
                .enumerate()
                .flat_map(|(k, l)| l.iter().map(move |&(node, leakage)| NodeJson { layer: k + 1, node: node.into(), leakage }))
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson { node: e.child.into(), remove: e.removed, ic: e.ic })
                .collect(),
        };
        serde_json::to_value(g).expect("graph serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let g = WeightedHierGraph {
            n: 2,
            layers: vec![
                vec![(AdversaryNode::strongest(2, 0), 1.0)],
                vec![(AdversaryNode::weakest(0), 1.19)],
            ],
            edges: vec![EdgeRecord { child: AdversaryNode::strongest(2, 0), removed: 1, ic: 0.19 }],
        };
        let v = g.to_json();
        assert_eq!(v["layers"][0]["node"], serde_json::json!([0, [1]]));
        assert_eq!(v["layers"][1]["layer"], 2);
        assert_eq!(v["edges"][0]["remove"], 1);
        assert_eq!(g.leakage_of(&AdversaryNode::weakest(0)), Some(1.19));
        assert_eq!(g.leakage_of(&AdversaryNode::weakest(1)), None);
    }
}
