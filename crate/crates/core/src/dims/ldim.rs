use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;

use crate::bits::HypSet;
use crate::class::HypothesisClass;
use crate::par;

/// Memoized Littlestone dimension of subsets of one class.
///
/// Uses the rank recursion `Ldim(∅) = −1`, `Ldim(S) = max_x 1 + min(Ldim(S_{x↦0}),
/// Ldim(S_{x↦1}))` floored at 0, keyed on the surviving hypothesis set. The
/// memo is a concurrent map, so one engine can serve many threads; entries are
/// exact so concurrent writers always agree.
pub struct LdimEngine {
    domain_size: usize,
    hypotheses: usize,
    cols: Vec<HypSet>,
    memo: DashMap<HypSet, i32>,
    explored: AtomicU64,
}

#[inline]
fn floor_log2(c: usize) -> i32 {
    debug_assert!(c > 0);
    (usize::BITS - 1 - c.leading_zeros()) as i32
}

impl LdimEngine {
    pub fn new(class: &HypothesisClass) -> Self {
        LdimEngine {
            domain_size: class.domain_size(),
            hypotheses: class.len(),
            cols: class.cols().to_vec(),
            memo: DashMap::new(),
            explored: AtomicU64::new(0),
        }
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn hypotheses(&self) -> usize {
        self.hypotheses
    }

    pub fn all(&self) -> HypSet {
        HypSet::full(self.hypotheses)
    }

    /// `(S_{x↦0}, S_{x↦1})`.
    #[inline]
    pub fn split(&self, set: &HypSet, x: usize) -> (HypSet, HypSet) {
        (set.difference(&self.cols[x]), set.intersection(&self.cols[x]))
    }

    #[inline]
    pub fn side(&self, set: &HypSet, x: usize, bit: u8) -> HypSet {
        if bit == 1 {
            set.intersection(&self.cols[x])
        } else {
            set.difference(&self.cols[x])
        }
    }

    /// Recursion nodes evaluated so far (cache misses).
    pub fn explored(&self) -> u64 {
        self.explored.load(Ordering::Relaxed)
    }

    pub fn cache_len(&self) -> usize {
        self.memo.len()
    }

    pub fn ldim_all(&self) -> i32 {
        self.ldim_par(&self.all())
    }

    /// Ldim of the hypotheses in `set`.
    pub fn ldim(&self, set: &HypSet) -> i32 {
        let c = set.count();
        if c <= 1 {
            return c as i32 - 1;
        }
        if let Some(v) = self.memo.get(set) {
            return *v;
        }
        self.explored.fetch_add(1, Ordering::Relaxed);
        let ub = floor_log2(c);
        let mut best = 0;
        for x in 0..self.domain_size {
            let ones = set.intersection_count(&self.cols[x]);
            if ones == 0 || ones == c {
                continue;
            }
            let zeros = c - ones;
            if floor_log2(ones.min(zeros)) < best {
                continue;
            }
            let (s0, s1) = self.split(set, x);
            // evaluate the smaller side first; it bounds the min
            let (a, b) = if zeros <= ones { (s0, s1) } else { (s1, s0) };
            let la = self.ldim(&a);
            if la < best {
                continue;
            }
            let lb = self.ldim(&b);
            best = best.max(1 + la.min(lb));
            if best == ub {
                break;
            }
        }
        self.memo.insert(set.clone(), best);
        best
    }

    /// Same value as [`ldim`](Self::ldim), with the root's candidate points
    /// evaluated in parallel.
    pub fn ldim_par(&self, set: &HypSet) -> i32 {
        let c = set.count();
        if c <= 1 {
            return c as i32 - 1;
        }
        if let Some(v) = self.memo.get(set) {
            return *v;
        }
        let per_point = par::map_range(0..self.domain_size, |x| {
            let ones = set.intersection_count(&self.cols[x]);
            if ones == 0 || ones == c {
                return 0;
            }
            let (s0, s1) = self.split(set, x);
            1 + self.ldim(&s0).min(self.ldim(&s1))
        });
        let best = per_point.into_iter().max().unwrap_or(0);
        self.memo.insert(set.clone(), best);
        best
    }

    /// Point labels, in heap order, of a depth-`depth` tree shattered by `set`.
    ///
    /// Each node takes the lowest-index point whose two sides both keep
    /// dimension at least `depth − 1`. Requires `depth ≤ ldim(set)`.
    pub fn shattered_tree(&self, set: &HypSet, depth: usize) -> Option<Vec<usize>> {
        if (self.ldim(set) as i64) < depth as i64 {
            return None;
        }
        let mut labels = vec![usize::MAX; (1usize << depth) - 1];
        self.fill_tree(set, depth, 0, &mut labels);
        Some(labels)
    }

    fn fill_tree(&self, set: &HypSet, depth: usize, node: usize, labels: &mut [usize]) {
        if depth == 0 {
            return;
        }
        let need = depth as i32 - 1;
        let x = (0..self.domain_size)
            .find(|&x| {
                let (s0, s1) = self.split(set, x);
                self.ldim(&s0) >= need && self.ldim(&s1) >= need
            })
            .expect("dimension guarantees a splitting point");
        labels[node] = x;
        let (s0, s1) = self.split(set, x);
        self.fill_tree(&s0, depth - 1, 2 * node + 1, labels);
        self.fill_tree(&s1, depth - 1, 2 * node + 2, labels);
    }
}
