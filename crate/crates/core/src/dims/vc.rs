use std::collections::HashSet;

use super::{DimResult, Status, Witness};
use crate::bits::{BitSet, PointSet};
use crate::class::HypothesisClass;
use crate::par;

/// All `2^|S|` patterns appear on `S`.
pub fn is_shattered_set(class: &HypothesisClass, s: &PointSet) -> bool {
    let k = s.count();
    if k >= 64 || (class.len() as u128) < (1u128 << k) {
        return false;
    }
    let points = s.to_indices();
    let patterns: HashSet<u64> = class
        .rows()
        .iter()
        .map(|row| {
            points
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &x)| acc | ((row.contains(x) as u64) << i))
        })
        .collect();
    patterns.len() as u128 == 1u128 << k
}

/// VC dimension by increasing subset size; stops at the first size with no
/// shattered set. `node_budget` bounds the number of subsets examined.
pub fn vcdim(class: &HypothesisClass, node_budget: u64) -> DimResult {
    if class.is_empty() {
        return DimResult::exact(-1, 0, None);
    }
    let n = class.domain_size();
    let mut best: Vec<usize> = Vec::new();
    let mut explored = 0u64;
    for size in 1..=n {
        if (class.len() as u128) < (1u128 << size.min(127)) {
            break;
        }
        let subsets = combinations(n, size);
        if explored + subsets.len() as u64 > node_budget {
            return DimResult {
                value: best.len() as i64,
                status: Status::LowerBound,
                explored,
                witness: Some(Witness::ShatteredSet { points: best }),
            };
        }
        explored += subsets.len() as u64;
        let hit = par::find_map_first(0..subsets.len(), |i| {
            let s = BitSet::from_indices(n, subsets[i].iter().copied());
            is_shattered_set(class, &s).then(|| subsets[i].clone())
        });
        match hit {
            Some(s) => best = s,
            None => break,
        }
    }
    DimResult::exact(
        best.len() as i64,
        explored,
        Some(Witness::ShatteredSet { points: best }),
    )
}

/// `size`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    let mut c: Vec<usize> = (0..size).collect();
    loop {
        out.push(c.clone());
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + n - size {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..size {
            c[j] = c[j - 1] + 1;
        }
    }
}
