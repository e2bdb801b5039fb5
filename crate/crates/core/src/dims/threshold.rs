use std::collections::HashSet;

use super::{DimResult, Status, Witness};
use crate::bits::{HypSet, PointSet};
use crate::class::HypothesisClass;
use crate::epsilon::Epsilon;

/// Pairs `(i, j)` with `h_j(a_i) ≠ [i < j]`.
pub fn half_graph_violations(class: &HypothesisClass, points: &[usize], hyps: &[usize]) -> usize {
    let k = points.len().min(hyps.len());
    let mut v = 0;
    for (i, &a) in points.iter().enumerate().take(k) {
        for (j, &h) in hyps.iter().enumerate().take(k) {
            if (class.value(h, a) == 1) != (i < j) {
                v += 1;
            }
        }
    }
    v
}

fn distinct_pairs(points: &[usize], hyps: &[usize], class: &HypothesisClass) -> bool {
    points.len() == hyps.len()
        && points.iter().all(|&a| a < class.domain_size())
        && hyps.iter().all(|&h| h < class.len())
        && points.iter().collect::<HashSet<_>>().len() == points.len()
        && hyps.iter().collect::<HashSet<_>>().len() == hyps.len()
}

/// Distinct points and hypotheses forming an exact half-graph.
pub fn is_half_graph(class: &HypothesisClass, points: &[usize], hyps: &[usize]) -> bool {
    distinct_pairs(points, hyps, class) && half_graph_violations(class, points, hyps) == 0
}

/// Distinct sequences with at most `ε · k²` violated pairs.
pub fn is_approx_half_graph(
    class: &HypothesisClass,
    points: &[usize],
    hyps: &[usize],
    eps: Epsilon,
) -> bool {
    let k = points.len();
    distinct_pairs(points, hyps, class)
        && eps.at_most(half_graph_violations(class, points, hyps), k * k)
}

struct ChainSearch<'a> {
    class: &'a HypothesisClass,
    zeros: Vec<PointSet>,
    budget: u64,
    explored: u64,
    truncated: bool,
    chain: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
}

impl ChainSearch<'_> {
    // `points`: never chosen, and 0 on every chosen hypothesis.
    // `hyps`: 1 on every chosen point.
    fn extend(&mut self, points: &PointSet, hyps: &HypSet) {
        if self.explored >= self.budget {
            self.truncated = true;
            return;
        }
        self.explored += 1;
        if self.chain.len() > self.best.len() {
            self.best = self.chain.clone();
        }
        if self.chain.len() + points.count().min(hyps.count()) <= self.best.len() {
            return;
        }
        for a in points.iter() {
            let next_hyps = hyps.intersection(self.class.col(a));
            for h in hyps.difference(self.class.col(a)).iter() {
                let bound = self.chain.len() + 1 + (points.count() - 1).min(next_hyps.count());
                if bound <= self.best.len() {
                    break;
                }
                let mut next_points = points.intersection(&self.zeros[h]);
                next_points.remove(a);
                self.chain.push((a, h));
                self.extend(&next_points, &next_hyps);
                self.chain.pop();
                if self.truncated {
                    return;
                }
            }
        }
    }
}

/// Longest exact half-graph, by depth-first search over (point, hypothesis)
/// pairs in ascending index order.
pub fn threshold_dim(class: &HypothesisClass, node_budget: u64) -> DimResult {
    if class.is_empty() {
        return DimResult::exact(-1, 0, None);
    }
    let mut search = ChainSearch {
        class,
        zeros: class.rows().iter().map(|r| r.complement()).collect(),
        budget: node_budget,
        explored: 0,
        truncated: false,
        chain: Vec::new(),
        best: Vec::new(),
    };
    search.extend(&PointSet::full(class.domain_size()), &class.all());
    let (points, hypotheses): (Vec<usize>, Vec<usize>) = search.best.iter().copied().unzip();
    DimResult {
        value: points.len() as i64,
        status: if search.truncated { Status::LowerBound } else { Status::Exact },
        explored: search.explored,
        witness: Some(Witness::Chain { points, hypotheses }),
    }
}

struct ApproxChainSearch<'a> {
    class: &'a HypothesisClass,
    target: usize,
    allowed: usize,
    budget: u64,
    explored: u64,
    truncated: bool,
    points: Vec<usize>,
    hyps: Vec<usize>,
    used_points: PointSet,
    used_hyps: HypSet,
}

impl ApproxChainSearch<'_> {
    fn extend(&mut self, violations: usize) -> bool {
        if self.points.len() == self.target {
            return true;
        }
        if self.explored >= self.budget {
            self.truncated = true;
            return false;
        }
        self.explored += 1;
        for a in 0..self.class.domain_size() {
            if self.used_points.contains(a) {
                continue;
            }
            // a sits after every chosen point, so every chosen h must be 0 on it
            let row_cost = self.hyps.iter().filter(|&&h| self.class.value(h, a) == 1).count();
            if violations + row_cost > self.allowed {
                continue;
            }
            for h in 0..self.class.len() {
                if self.used_hyps.contains(h) {
                    continue;
                }
                let col_cost = self.points.iter().filter(|&&p| self.class.value(h, p) == 0).count();
                let diag = self.class.value(h, a) as usize;
                let v = violations + row_cost + col_cost + diag;
                if v > self.allowed {
                    continue;
                }
                self.points.push(a);
                self.hyps.push(h);
                self.used_points.insert(a);
                self.used_hyps.insert(h);
                if self.extend(v) {
                    return true;
                }
                self.points.pop();
                self.hyps.pop();
                self.used_points.remove(a);
                self.used_hyps.remove(h);
                if self.truncated {
                    return false;
                }
            }
        }
        false
    }
}

/// Longest `k` with distinct sequences violating at most `ε · k²` pairs.
///
/// Tries `k` from `min(n, m)` downwards; the first feasible `k` is the
/// answer. If the budget runs out first, falls back to the exact threshold
/// dimension as a lower bound.
pub fn approx_threshold_dim(class: &HypothesisClass, eps: Epsilon, node_budget: u64) -> DimResult {
    if class.is_empty() {
        return DimResult::exact(-1, 0, None);
    }
    let mut explored = 0u64;
    let top = class.domain_size().min(class.len());
    for k in (1..=top).rev() {
        let allowed = ((eps.numer() as u128 * (k * k) as u128) / eps.denom() as u128) as usize;
        let mut search = ApproxChainSearch {
            class,
            target: k,
            allowed,
            budget: node_budget.saturating_sub(explored),
            explored: 0,
            truncated: false,
            points: Vec::with_capacity(k),
            hyps: Vec::with_capacity(k),
            used_points: PointSet::new(class.domain_size()),
            used_hyps: HypSet::new(class.len()),
        };
        let found = search.extend(0);
        explored += search.explored;
        if found {
            return DimResult::exact(
                k as i64,
                explored,
                Some(Witness::Chain {
                    points: search.points,
                    hypotheses: search.hyps,
                }),
            );
        }
        if search.truncated {
            let mut fallback = threshold_dim(class, node_budget);
            fallback.status = Status::LowerBound;
            fallback.explored += explored;
            return fallback;
        }
    }
    DimResult::exact(
        0,
        explored,
        Some(Witness::Chain {
            points: vec![],
            hypotheses: vec![],
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dims::{check_eps_witness, check_exact_witness};
    use crate::generate;

    fn brute_threshold(class: &HypothesisClass) -> i64 {
        // all injective sequences, largest k first
        if class.is_empty() {
            return -1;
        }
        let top = class.domain_size().min(class.len());
        for k in (1..=top).rev() {
            let pts = permutations(class.domain_size(), k);
            let hs = permutations(class.len(), k);
            if pts.iter().any(|p| hs.iter().any(|h| is_half_graph(class, p, h))) {
                return k as i64;
            }
        }
        0
    }

    fn permutations(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n, k - 1) {
            for x in 0..n {
                if !p.contains(&x) {
                    let mut q = p.clone();
                    q.push(x);
                    out.push(q);
                }
            }
        }
        out
    }

    #[test]
    fn examples() {
        let t8 = generate::threshold(8);
        let r = threshold_dim(&t8, u64::MAX);
        assert_eq!(r.value, 8);
        assert!(check_exact_witness(&t8, &r));
        let f2 = generate::full(2).unwrap();
        assert_eq!(threshold_dim(&f2, u64::MAX).value, 2);
        assert_eq!(brute_threshold(&f2), 2);
        assert_eq!(threshold_dim(&HypothesisClass::empty(2), u64::MAX).value, -1);
    }

    #[test]
    fn single_hypothesis_matches_brute_force() {
        for bits in ["0", "1", "01", "11", "000", "101", "111"] {
            let c = generate::singleton(bits).unwrap();
            let expected = if bits.contains('0') { 1 } else { 0 };
            assert_eq!(brute_threshold(&c), expected);
            assert_eq!(threshold_dim(&c, u64::MAX).value, expected);
        }
    }

    #[test]
    fn matches_brute_force_on_random_classes() {
        for seed in 0..30 {
            let c = generate::random(4, 1 + seed as usize % 7, seed).unwrap();
            let r = threshold_dim(&c, u64::MAX);
            assert_eq!(r.value, brute_threshold(&c), "seed {seed}");
            assert!(check_exact_witness(&c, &r));
        }
    }

    #[test]
    fn approx_examples() {
        let e = Epsilon::new(1, 8).unwrap();
        let flipped = generate::with_flips(&generate::threshold(8), &[(5, 1)]).unwrap();
        let r = approx_threshold_dim(&flipped, e, u64::MAX);
        assert_eq!(r.value, 8);
        assert!(check_eps_witness(&flipped, e, &r));
        assert_eq!(half_graph_violations(&flipped, &(0..8).collect::<Vec<_>>(), &(0..8).collect::<Vec<_>>()), 1);

        // no k up to min(n, m) lets a violation through
        let tiny = Epsilon::new(1, 1000).unwrap();
        for seed in 0..10 {
            let c = generate::random(4, 6, seed).unwrap();
            assert_eq!(
                approx_threshold_dim(&c, tiny, u64::MAX).value,
                threshold_dim(&c, u64::MAX).value
            );
        }
    }

    #[test]
    fn approx_at_least_exact() {
        let e = Epsilon::new(1, 4).unwrap();
        for seed in 0..10 {
            let c = generate::random(5, 8, seed).unwrap();
            let a = approx_threshold_dim(&c, e, 10_000_000);
            assert!(a.value >= threshold_dim(&c, u64::MAX).value);
            assert!(check_eps_witness(&c, e, &a));
        }
    }
}
