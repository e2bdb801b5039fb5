//! Littlestone, VC and threshold dimensions, plus their approximate and
//! virtual variants.
//!
//! Every search that can blow up takes explicit caps. A result whose search
//! stopped on the node budget is marked [`Status::LowerBound`]; values of the
//! depth-capped variants are relative to `max_depth`.

mod approx;
mod ldim;
mod oracle;
mod threshold;
mod tree;
mod vc;
mod virtuals;

use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::class::HypothesisClass;
use crate::epsilon::Epsilon;

pub use approx::approx_ldim;
pub use ldim::LdimEngine;
pub use oracle::{ldim_oracle, ORACLE_TREE_CAP};
pub use threshold::{
    approx_threshold_dim, half_graph_violations, is_approx_half_graph, is_half_graph,
    threshold_dim,
};
pub use tree::{address, node_of, NodeLabel, VirtualTree};
pub use vc::{is_shattered_set, vcdim};
pub use virtuals::{
    good_tree, good_tree_depth, virtual_elements, virtual_ldim, virtual_threshold_dim,
    VirtualElements, VirtualThreshold,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Exact,
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Tree { tree: VirtualTree },
    /// `h_j(a_i) = 1` iff `i < j`, possibly with tolerated violations.
    Chain { points: Vec<usize>, hypotheses: Vec<usize> },
    /// A chain whose points are virtual elements.
    VirtualChain { elements: Vec<Vec<usize>>, hypotheses: Vec<usize> },
    ShatteredSet { points: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimResult {
    pub value: i64,
    pub status: Status,
    pub explored: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl DimResult {
    pub fn exact(value: i64, explored: u64, witness: Option<Witness>) -> Self {
        DimResult {
            value,
            status: Status::Exact,
            explored,
            witness,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.status == Status::Exact
    }
}

/// Search limits shared by the exponential searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_depth: usize,
    /// Largest virtual element; `None` means the whole domain.
    pub max_subset_size: Option<usize>,
    pub node_budget: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_depth: 4,
            max_subset_size: None,
            node_budget: 5_000_000,
        }
    }
}

/// Exact Littlestone dimension with a shattered tree as witness.
pub fn ldim(class: &HypothesisClass) -> DimResult {
    let engine = LdimEngine::new(class);
    let d = engine.ldim_all();
    let witness = (d >= 0).then(|| {
        let labels = engine
            .shattered_tree(&engine.all(), d as usize)
            .expect("depth equals the dimension");
        Witness::Tree {
            tree: VirtualTree::from_points(d as usize, &labels).expect("complete tree"),
        }
    });
    DimResult::exact(d as i64, engine.explored(), witness)
}

/// Checks a witness against the plain (exact) dimension it claims.
pub fn check_exact_witness(class: &HypothesisClass, result: &DimResult) -> bool {
    match &result.witness {
        None => result.value <= 0,
        Some(Witness::Tree { tree }) => {
            tree.depth() as i64 == result.value && tree.is_shattered(class, None)
        }
        Some(Witness::Chain { points, hypotheses }) => {
            points.len() as i64 == result.value && is_half_graph(class, points, hypotheses)
        }
        Some(Witness::ShatteredSet { points }) => {
            points.len() as i64 == result.value
                && is_shattered_set(class, &BitSet::from_indices(class.domain_size(), points.iter().copied()))
        }
        Some(Witness::VirtualChain { .. }) => false,
    }
}

/// Checks a witness of an ε-variant: ε-shattered point trees for
/// [`approx_ldim`], vote-shattered subset trees for [`virtual_ldim`],
/// approximate chains and virtual chains.
pub fn check_eps_witness(class: &HypothesisClass, eps: Epsilon, result: &DimResult) -> bool {
    match &result.witness {
        None => result.value <= 0,
        Some(Witness::Tree { tree }) => {
            if tree.depth() as i64 != result.value {
                return false;
            }
            let point_tree = tree
                .labels()
                .iter()
                .all(|l| matches!(l, NodeLabel::Point { .. }));
            if point_tree {
                tree.is_eps_shattered(class, eps)
            } else {
                let labels_good = tree.labels().iter().all(|l| match l {
                    NodeLabel::Subset { points } => {
                        let b = BitSet::from_indices(class.domain_size(), points.iter().copied());
                        crate::majority::is_good_subset(&b, class, eps).unwrap_or(false)
                    }
                    NodeLabel::Distribution { weights } => {
                        crate::majority::is_good_dist(weights, class, eps)
                    }
                    NodeLabel::Point { .. } => true,
                });
                labels_good && tree.is_shattered(class, Some(eps))
            }
        }
        Some(Witness::Chain { points, hypotheses }) => {
            points.len() as i64 == result.value && is_approx_half_graph(class, points, hypotheses, eps)
        }
        Some(Witness::VirtualChain { elements, hypotheses }) => {
            if elements.len() as i64 != result.value || hypotheses.len() != elements.len() {
                return false;
            }
            let k = elements.len();
            let mut votes = Vec::with_capacity(k);
            for e in elements {
                let b = BitSet::from_indices(class.domain_size(), e.iter().copied());
                if !crate::majority::is_good_subset(&b, class, eps).unwrap_or(false) {
                    return false;
                }
                votes.push(crate::majority::vote_column(class, &b, eps));
            }
            let distinct_h: std::collections::HashSet<_> = hypotheses.iter().collect();
            let distinct_e: std::collections::HashSet<_> = elements.iter().collect();
            distinct_h.len() == k
                && distinct_e.len() == k
                && (0..k).all(|i| {
                    (0..k).all(|j| votes[i].contains(hypotheses[j]) == (i < j))
                })
        }
        Some(Witness::ShatteredSet { .. }) => false,
    }
}
