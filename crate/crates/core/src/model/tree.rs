use serde::{Deserialize, Serialize};

/// A node of a binary decision tree stored in a flat array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class histogram (forest) or regression weight (boosting).
    Leaf(Vec<f64>),
}

/// Binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf(v) => return v,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
                Node::Leaf(_) => 0,
            }
        }
        go(self, 0)
    }

    /// Features used by at least one split.
    pub fn used_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf(_) => None,
        })
    }

    /// Check that every split points to existing children.
    pub fn is_well_formed(&self) -> bool {
        !self.nodes.is_empty()
            && self.nodes.iter().all(|n| match n {
                Node::Split { left, right, threshold, .. } => {
                    *left < self.nodes.len() && *right < self.nodes.len() && threshold.is_finite()
                }
                Node::Leaf(v) => !v.is_empty(),
            })
    }
}
