use serde::{Deserialize, Serialize};

use crate::class::HypothesisClass;
use crate::epsilon::Epsilon;
use crate::error::{Error, Result};
use crate::majority::Distribution;

/// What a tree node asks about.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeLabel {
    Point { point: usize },
    /// A virtual element; hypotheses answer with their majority vote.
    Subset { points: Vec<usize> },
    Distribution { weights: Distribution },
}

impl NodeLabel {
    /// The bit `h` sends down from this node, if defined.
    ///
    /// Subset and distribution labels need `eps`; without it they answer `None`.
    pub fn value(&self, class: &HypothesisClass, h: usize, eps: Option<Epsilon>) -> Option<u8> {
        match self {
            NodeLabel::Point { point } => Some(class.value(h, *point)),
            NodeLabel::Subset { points } => {
                let eps = eps?;
                let total = points.len();
                let ones = points.iter().filter(|&&x| class.value(h, x) == 1).count();
                if total == 0 {
                    None
                } else if eps.below(total - ones, total) {
                    Some(1)
                } else if eps.below(ones, total) {
                    Some(0)
                } else {
                    None
                }
            }
            NodeLabel::Distribution { weights } => weights.vote(class, h, eps?),
        }
    }
}

/// Complete binary tree in heap order: node `i` has children `2i + 1`
/// (branch bit 0) and `2i + 2` (branch bit 1). Depth counts internal levels,
/// so a depth-`T` tree has `2^T − 1` labels and `2^T` branches; the root's
/// address is the empty string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VirtualTree {
    depth: usize,
    labels: Vec<NodeLabel>,
}

impl VirtualTree {
    pub fn new(depth: usize, labels: Vec<NodeLabel>) -> Result<Self> {
        if depth >= usize::BITS as usize - 1 || labels.len() != (1usize << depth) - 1 {
            return Err(Error::domain(format!(
                "a depth-{depth} tree needs 2^{depth} − 1 labels, got {}",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if let NodeLabel::Subset { points } = l {
                if points.is_empty() {
                    return Err(Error::domain(format!("node {} has an empty subset", address(i))));
                }
            }
        }
        Ok(VirtualTree { depth, labels })
    }

    pub fn from_points(depth: usize, points: &[usize]) -> Result<Self> {
        Self::new(depth, points.iter().map(|&point| NodeLabel::Point { point }).collect())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &NodeLabel {
        &self.labels[node]
    }

    /// Branch index (the leaf's bits read root first, as a binary number)
    /// followed by `h`, or `None` if some vote on the way is undefined.
    pub fn branch_of(&self, class: &HypothesisClass, h: usize, eps: Option<Epsilon>) -> Option<usize> {
        let mut node = 0;
        let mut branch = 0;
        for _ in 0..self.depth {
            let bit = self.labels[node].value(class, h, eps)? as usize;
            branch = (branch << 1) | bit;
            node = 2 * node + 1 + bit;
        }
        Some(branch)
    }

    /// Every branch is followed exactly by some hypothesis.
    pub fn is_shattered(&self, class: &HypothesisClass, eps: Option<Epsilon>) -> bool {
        let mut hit = vec![false; 1 << self.depth];
        for h in 0..class.len() {
            if let Some(b) = self.branch_of(class, h, eps) {
                hit[b] = true;
            }
        }
        hit.iter().all(|&b| b)
    }

    /// Nodes along `branch` (root first).
    pub fn path(&self, branch: usize) -> Vec<usize> {
        let mut node = 0;
        let mut out = Vec::with_capacity(self.depth);
        for level in 0..self.depth {
            out.push(node);
            let bit = (branch >> (self.depth - 1 - level)) & 1;
            node = 2 * node + 1 + bit;
        }
        out
    }

    /// Point-labeled trees only: every branch has a hypothesis disagreeing
    /// with it on fewer than `ε · depth` of its nodes.
    pub fn is_eps_shattered(&self, class: &HypothesisClass, eps: Epsilon) -> bool {
        let t = self.depth;
        (0..1usize << t).all(|branch| {
            let nodes = self.path(branch);
            (0..class.len()).any(|h| {
                let mistakes = nodes
                    .iter()
                    .enumerate()
                    .filter(|&(level, &node)| {
                        let want = ((branch >> (t - 1 - level)) & 1) as u8;
                        self.labels[node].value(class, h, None) != Some(want)
                    })
                    .count();
                eps.below(mistakes, t)
            })
        })
    }
}

/// Binary address of heap node `i`: `0` for a left step, `1` for a right step.
pub fn address(i: usize) -> String {
    let k = i + 1;
    let level = (usize::BITS - 1 - k.leading_zeros()) as usize;
    (0..level)
        .rev()
        .map(|b| if (k >> b) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Heap index of a binary address.
pub fn node_of(address: &str) -> Option<usize> {
    let mut node = 0usize;
    for c in address.chars() {
        node = match c {
            '0' => 2 * node + 1,
            '1' => 2 * node + 2,
            _ => return None,
        };
    }
    Some(node)
}

#[derive(Serialize, Deserialize)]
struct TreeNode {
    address: String,
    label: NodeLabel,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    depth: usize,
    nodes: Vec<TreeNode>,
}

impl Serialize for VirtualTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TreeDoc {
            depth: self.depth,
            nodes: self
                .labels
                .iter()
                .enumerate()
                .map(|(i, label)| TreeNode {
                    address: address(i),
                    label: label.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VirtualTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = TreeDoc::deserialize(d)?;
        if doc.depth > 24 {
            return Err(D::Error::custom(format!("tree depth {} is too large", doc.depth)));
        }
        let size = (1usize << doc.depth) - 1;
        let mut labels: Vec<Option<NodeLabel>> = vec![None; size];
        for n in doc.nodes {
            let i = node_of(&n.address)
                .filter(|&i| i < size)
                .ok_or_else(|| D::Error::custom(format!("bad address `{}`", n.address)))?;
            labels[i] = Some(n.label);
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| D::Error::custom(format!("node `{}` missing", address(i)))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        VirtualTree::new(doc.depth, labels).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    #[test]
    fn addresses() {
        assert_eq!(address(0), "");
        assert_eq!(address(1), "0");
        assert_eq!(address(2), "1");
        assert_eq!(address(5), "10");
        for i in 0..100 {
            assert_eq!(node_of(&address(i)), Some(i));
        }
    }

    #[test]
    fn full2_tree() {
        let f2 = generate::full(2).unwrap();
        let t = VirtualTree::from_points(2, &[0, 1, 1]).unwrap();
        assert!(t.is_shattered(&f2, None));
        let bad = VirtualTree::from_points(2, &[0, 0, 0]).unwrap();
        assert!(!bad.is_shattered(&f2, None));
        assert!(VirtualTree::from_points(2, &[0, 1]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let t = VirtualTree::new(
            2,
            vec![
                NodeLabel::Subset { points: vec![0, 2] },
                NodeLabel::Point { point: 1 },
                NodeLabel::Distribution {
                    weights: Distribution::point_mass(3),
                },
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"address\":\"\""));
        let back: VirtualTree = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
