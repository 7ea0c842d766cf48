use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

/// Largest number of tuples a prior-knowledge bitmask can hold.
pub const MAX_TUPLES: usize = 32;

/// Adversary `A(i, K)`: attacks tuple `attack` knowing the tuples in `prior`.
///
/// `prior` is a bitmask over tuple indices and never contains `attack`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdversaryNode {
    pub attack: usize,
    pub prior: u32,
}

impl AdversaryNode {
    pub fn new(attack: usize, prior: &[usize]) -> Self {
        let prior = prior.iter().fold(0u32, |m, &k| m | (1 << k)) & !(1 << attack);
        Self { attack, prior }
    }

    /// The strongest adversary on `attack`: everything else is known.
    pub fn strongest(n: usize, attack: usize) -> Self {
        Self { attack, prior: full_mask(n) & !(1 << attack) }
    }

    pub fn weakest(attack: usize) -> Self {
        Self { attack, prior: 0 }
    }

    pub fn prior_len(&self) -> usize {
        self.prior.count_ones() as usize
    }

    /// Layer number `n - |K|`: 1 for the strongest adversaries, `n` for the weakest.
    pub fn layer(&self, n: usize) -> usize {
        n - self.prior_len()
    }

    pub fn knows(&self, j: usize) -> bool {
        self.prior & (1 << j) != 0
    }

    pub fn prior_indices(&self) -> Vec<usize> {
        mask_indices(self.prior)
    }

    /// The ancestor obtained by forgetting tuple `j`.
    pub fn without(&self, j: usize) -> Self {
        Self { attack: self.attack, prior: self.prior & !(1 << j) }
    }
}

impl fmt::Display for AdversaryNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k: Vec<String> = self.prior_indices().iter().map(ToString::to_string).collect();
        write!(f, "({}, {{{}}})", self.attack, k.join(","))
    }
}

impl Serialize for AdversaryNode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AdversaryNode", 2)?;
        st.serialize_field("attack", &self.attack)?;
        st.serialize_field("prior", &self.prior_indices())?;
        st.end()
    }
}

/// `[i, [K...]]`, the node key used in the JSON graph and edge files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeKey(pub usize, pub Vec<usize>);

impl From<AdversaryNode> for NodeKey {
    fn from(n: AdversaryNode) -> Self {
        NodeKey(n.attack, n.prior_indices())
    }
}

impl From<&NodeKey> for AdversaryNode {
    fn from(k: &NodeKey) -> Self {
        AdversaryNode::new(k.0, &k.1)
    }
}

pub fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

pub fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|k| mask & (1 << k) != 0).collect()
}
