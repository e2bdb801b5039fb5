use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use dashmap::DashMap;

use super::{Caps, DimResult, Status, VirtualTree, Witness};
use crate::class::HypothesisClass;
use crate::epsilon::Epsilon;
use crate::par;

/// Surviving hypotheses with their mistake counts so far, sorted by index.
type State = Vec<(u32, u16)>;

struct ApproxSearch<'a> {
    class: &'a HypothesisClass,
    /// Largest tolerated mistake count on a branch.
    max_mistakes: u16,
    /// `binom[r][j]` = C(r, j).
    binom: Vec<Vec<u128>>,
    memo: DashMap<(usize, State), bool>,
    explored: AtomicU64,
    budget: u64,
    aborted: AtomicBool,
}

impl ApproxSearch<'_> {
    fn child(&self, state: &State, x: usize, bit: u8) -> State {
        state
            .iter()
            .filter_map(|&(h, c)| {
                let c = c + (self.class.value(h as usize, x) != bit) as u16;
                (c <= self.max_mistakes).then_some((h, c))
            })
            .collect()
    }

    /// Branches a state can still cover at `levels` remaining, counting each
    /// hypothesis once per branch it stays within budget on.
    fn capacity(&self, state: &State, levels: usize) -> u128 {
        state
            .iter()
            .map(|&(_, c)| {
                let slack = (self.max_mistakes - c) as usize;
                self.binom[levels][..=slack.min(levels)].iter().sum::<u128>()
            })
            .sum()
    }

    /// A depth-`levels` tree exists all of whose branches stay within budget
    /// for some hypothesis in `state`.
    fn realizable(&self, state: &State, levels: usize) -> bool {
        if state.is_empty() {
            return false;
        }
        if levels == 0 {
            return true;
        }
        if self.capacity(state, levels) < 1u128 << levels {
            return false;
        }
        if self.aborted.load(Ordering::Relaxed) {
            return false;
        }
        let key = (levels, state.clone());
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        if self.explored.fetch_add(1, Ordering::Relaxed) >= self.budget {
            self.aborted.store(true, Ordering::Relaxed);
            return false;
        }
        let result = (0..self.class.domain_size()).any(|x| self.splits(state, levels, x));
        if !self.aborted.load(Ordering::Relaxed) {
            self.memo.insert(key, result);
        }
        result
    }

    fn splits(&self, state: &State, levels: usize, x: usize) -> bool {
        self.realizable(&self.child(state, x, 0), levels - 1)
            && self.realizable(&self.child(state, x, 1), levels - 1)
    }

    fn root(&self, levels: usize) -> Option<usize> {
        let state: State = (0..self.class.len() as u32).map(|h| (h, 0)).collect();
        if levels == 0 {
            return None;
        }
        par::find_map_first(0..self.class.domain_size(), |x| {
            self.splits(&state, levels, x).then_some(x)
        })
    }

    fn fill(&self, state: &State, levels: usize, node: usize, labels: &mut [usize]) {
        if levels == 0 {
            return;
        }
        let x = (0..self.class.domain_size())
            .find(|&x| self.splits(state, levels, x))
            .expect("state was realizable");
        labels[node] = x;
        self.fill(&self.child(state, x, 0), levels - 1, 2 * node + 1, labels);
        self.fill(&self.child(state, x, 1), levels - 1, 2 * node + 2, labels);
    }
}

fn binomials(n: usize) -> Vec<Vec<u128>> {
    let mut b = vec![vec![0u128; n + 1]; n + 1];
    for r in 0..=n {
        b[r][0] = 1;
        for j in 1..=r {
            b[r][j] = b[r - 1][j - 1] + if j < r { b[r - 1][j] } else { 0 };
        }
    }
    b
}

/// Deepest point-labeled tree, up to `caps.max_depth`, every branch of which
/// some hypothesis follows with fewer than `ε · depth` mistakes.
///
/// Realizability is not monotone in the depth (the tolerated mistake count
/// jumps at multiples of `1/ε`), so every depth up to the cap is searched.
/// A depth-0 tree has one empty branch, realized by any hypothesis.
pub fn approx_ldim(class: &HypothesisClass, eps: Epsilon, caps: &Caps) -> DimResult {
    if class.is_empty() {
        return DimResult::exact(-1, 0, None);
    }
    let binom = binomials(caps.max_depth);
    let mut best = 0usize;
    let mut best_tree: Option<Vec<usize>> = None;
    let mut explored = 0u64;
    let mut truncated = false;
    for depth in 1..=caps.max_depth {
        let Some(max_mistakes) = eps.max_below(depth) else {
            continue;
        };
        let search = ApproxSearch {
            class,
            max_mistakes: max_mistakes as u16,
            binom: binom.clone(),
            memo: DashMap::new(),
            explored: AtomicU64::new(0),
            budget: caps.node_budget.saturating_sub(explored),
            aborted: AtomicBool::new(false),
        };
        let root = search.root(depth);
        explored += search.explored.load(Ordering::Relaxed);
        if search.aborted.load(Ordering::Relaxed) {
            truncated = true;
            break;
        }
        if let Some(x) = root {
            let mut labels = vec![usize::MAX; (1 << depth) - 1];
            labels[0] = x;
            let state: State = (0..class.len() as u32).map(|h| (h, 0)).collect();
            search.fill(&search.child(&state, x, 0), depth - 1, 1, &mut labels);
            search.fill(&search.child(&state, x, 1), depth - 1, 2, &mut labels);
            best = depth;
            best_tree = Some(labels);
        }
    }
    let witness = best_tree.map(|labels| Witness::Tree {
        tree: VirtualTree::from_points(best, &labels).expect("complete tree"),
    });
    DimResult {
        value: best as i64,
        status: if truncated { Status::LowerBound } else { Status::Exact },
        explored,
        witness,
    }
}
