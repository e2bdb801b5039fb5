use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::vc::combinations;
use super::{threshold_dim, Caps, DimResult, LdimEngine, NodeLabel, Status, VirtualTree, Witness};
use crate::bits::{BitSet, HypSet};
use crate::class::HypothesisClass;
use crate::epsilon::Epsilon;
use crate::majority::{is_good_subset, vote_column, Distribution};
use crate::par;

/// The ε-good subsets of the domain, largest first and lexicographic within
/// a size, with the set of hypotheses voting 1 on each.
#[derive(Clone, Debug)]
pub struct VirtualElements {
    pub subsets: Vec<Vec<usize>>,
    pub votes: Vec<HypSet>,
    /// False when the node budget stopped the enumeration early.
    pub complete: bool,
    pub examined: u64,
}

impl VirtualElements {
    /// The class whose points are the elements with pairwise distinct vote
    /// columns (first element kept), plus the element index behind each
    /// point and the source hypothesis behind each deduplicated row.
    pub fn vote_class(&self, hypotheses: usize) -> (HypothesisClass, Vec<usize>, Vec<usize>) {
        let mut seen: HashMap<&HypSet, ()> = HashMap::new();
        let mut kept = Vec::new();
        for (i, col) in self.votes.iter().enumerate() {
            if seen.insert(col, ()).is_none() {
                kept.push(i);
            }
        }
        let mut rows = vec![BitSet::new(kept.len()); hypotheses];
        for (p, &i) in kept.iter().enumerate() {
            for h in self.votes[i].iter() {
                rows[h].insert(p);
            }
        }
        let (class, source) = HypothesisClass::from_rows_dedup(kept.len(), rows);
        (class, kept, source)
    }
}

pub fn virtual_elements(
    class: &HypothesisClass,
    eps: Epsilon,
    max_subset_size: Option<usize>,
    node_budget: u64,
) -> VirtualElements {
    let n = class.domain_size();
    let top = max_subset_size.unwrap_or(n).min(n);
    let mut subsets = Vec::new();
    let mut votes = Vec::new();
    let mut examined = 0u64;
    let mut complete = true;
    for size in (1..=top).rev() {
        let mut combos = combinations(n, size);
        let room = node_budget.saturating_sub(examined) as usize;
        if combos.len() > room {
            combos.truncate(room);
            complete = false;
        }
        examined += combos.len() as u64;
        let good = par::map_slice(&combos, |pts| {
            let b = BitSet::from_indices(n, pts.iter().copied());
            is_good_subset(&b, class, eps)
                .expect("nonempty subset")
                .then(|| vote_column(class, &b, eps))
        });
        for (pts, v) in combos.into_iter().zip(good) {
            if let Some(col) = v {
                subsets.push(pts);
                votes.push(col);
            }
        }
        if !complete {
            break;
        }
    }
    VirtualElements {
        subsets,
        votes,
        complete,
        examined,
    }
}

/// Depth and the point subset at each node, in heap order.
type SubsetTree = (usize, Vec<Vec<usize>>);

fn search_tree(class: &HypothesisClass, eps: Epsilon, caps: &Caps) -> (DimResult, Option<SubsetTree>) {
    if class.is_empty() {
        return (DimResult::exact(-1, 0, None), None);
    }
    let elements = virtual_elements(class, eps, caps.max_subset_size, caps.node_budget);
    let (votes, element_of, _) = elements.vote_class(class.len());
    let engine = LdimEngine::new(&votes);
    let d = engine.ldim_all().max(0) as usize;
    let depth = d.min(caps.max_depth);
    let labels = engine
        .shattered_tree(&engine.all(), depth)
        .expect("depth within the dimension");
    let subsets = labels
        .iter()
        .map(|&p| elements.subsets[element_of[p]].clone())
        .collect();
    let result = DimResult {
        value: depth as i64,
        status: if elements.complete { Status::Exact } else { Status::LowerBound },
        explored: elements.examined + engine.explored(),
        witness: None,
    };
    (result, Some((depth, subsets)))
}

/// Deepest tree labeled by ε-good subsets, up to `caps.max_depth`, all of
/// whose branches some hypothesis follows through its majority votes.
pub fn virtual_ldim(class: &HypothesisClass, eps: Epsilon, caps: &Caps) -> DimResult {
    let (mut result, tree) = search_tree(class, eps, caps);
    result.witness = tree.map(|(depth, subsets)| Witness::Tree {
        tree: VirtualTree::new(
            depth,
            subsets.into_iter().map(|points| NodeLabel::Subset { points }).collect(),
        )
        .expect("complete tree"),
    });
    result
}

/// A shattered tree whose labels are uniform distributions on ε-good
/// subsets, of the depth [`virtual_ldim`] finds.
pub fn good_tree(class: &HypothesisClass, eps: Epsilon, caps: &Caps) -> Option<VirtualTree> {
    search_tree(class, eps, caps).1.map(|t| uniform_tree(class, t))
}

fn uniform_tree(class: &HypothesisClass, (depth, subsets): SubsetTree) -> VirtualTree {
    let n = class.domain_size();
    let labels = subsets
        .into_iter()
        .map(|points| NodeLabel::Distribution {
            weights: Distribution::uniform(&BitSet::from_indices(n, points)).expect("nonempty"),
        })
        .collect();
    VirtualTree::new(depth, labels).expect("complete tree")
}

/// The depth of [`good_tree`]; equal to [`virtual_ldim`] by construction.
pub fn good_tree_depth(class: &HypothesisClass, eps: Epsilon, caps: &Caps) -> DimResult {
    let (mut result, tree) = search_tree(class, eps, caps);
    result.witness = tree.map(|t| Witness::Tree {
        tree: uniform_tree(class, t),
    });
    result
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualThreshold {
    #[serde(flatten)]
    pub result: DimResult,
    /// Chain length counting elements as distinct subsets.
    pub raw_distinct: i64,
    /// Chain length counting elements as distinct vote columns.
    pub vote_distinct: i64,
}

/// Longest half-graph between ε-good subsets and hypotheses, read through
/// majority votes.
///
/// Two chain elements always differ in their vote columns (the hypothesis
/// at the later position votes 1 on the earlier element and 0 on the later),
/// so the raw and vote-distinct counts coincide; both are reported.
pub fn virtual_threshold_dim(class: &HypothesisClass, eps: Epsilon, caps: &Caps) -> VirtualThreshold {
    if class.is_empty() {
        let r = DimResult::exact(-1, 0, None);
        return VirtualThreshold {
            result: r,
            raw_distinct: -1,
            vote_distinct: -1,
        };
    }
    let elements = virtual_elements(class, eps, caps.max_subset_size, caps.node_budget);
    let (votes, element_of, source) = elements.vote_class(class.len());
    let inner = threshold_dim(&votes, caps.node_budget);
    let witness = match inner.witness {
        Some(Witness::Chain { points, hypotheses }) => Some(Witness::VirtualChain {
            elements: points
                .iter()
                .map(|&p| elements.subsets[element_of[p]].clone())
                .collect(),
            hypotheses: hypotheses.iter().map(|&h| source[h]).collect(),
        }),
        other => other,
    };
    let status = if elements.complete { inner.status } else { Status::LowerBound };
    VirtualThreshold {
        raw_distinct: inner.value,
        vote_distinct: inner.value,
        result: DimResult {
            value: inner.value,
            status,
            explored: elements.examined + inner.explored,
            witness,
        },
    }
}
