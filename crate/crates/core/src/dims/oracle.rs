use super::{DimResult, VirtualTree, Witness};
use crate::class::HypothesisClass;
use crate::error::{Error, Result};
use crate::par;

/// Most trees [`ldim_oracle`] will enumerate at a single depth.
pub const ORACLE_TREE_CAP: u128 = 50_000_000;

/// Littlestone dimension straight from the definition.
///
/// For each depth in turn, enumerates every assignment of points to the
/// `2^d − 1` nodes and looks for one whose branches are all followed by some
/// hypothesis. Shares nothing with [`LdimEngine`](super::LdimEngine): it
/// reads hypotheses row by row and never restricts the class.
pub fn ldim_oracle(class: &HypothesisClass, max_depth: usize) -> Result<DimResult> {
    if class.is_empty() {
        return Ok(DimResult::exact(-1, 0, None));
    }
    let n = class.domain_size();
    let mut best = 0usize;
    let mut witness = None;
    let mut explored = 0u64;
    for depth in 1..=max_depth {
        let nodes = (1usize << depth) - 1;
        let count = (n as u128).checked_pow(nodes as u32).unwrap_or(u128::MAX);
        if count > ORACLE_TREE_CAP {
            return Err(Error::Resource {
                cap: "ldim_oracle trees per depth",
                needed: count,
                limit: ORACLE_TREE_CAP,
            });
        }
        let found = par::find_map_first(0..count as usize, |code| {
            let labels = decode(code, n, nodes);
            shattered(class, depth, &labels).then_some(labels)
        });
        // an upper estimate: the parallel search may stop short of `count`
        explored += count as u64;
        match found {
            Some(labels) => {
                best = depth;
                witness = Some(labels);
            }
            None => break,
        }
    }
    Ok(DimResult::exact(
        best as i64,
        explored,
        witness.map(|l| tree_witness(best, &l)),
    ))
}

fn tree_witness(depth: usize, labels: &[usize]) -> Witness {
    Witness::Tree {
        tree: VirtualTree::from_points(depth, labels).expect("complete tree"),
    }
}

fn decode(mut code: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut() {
        *slot = code % base;
        code /= base;
    }
    out
}

fn shattered(class: &HypothesisClass, depth: usize, labels: &[usize]) -> bool {
    let mut realized = vec![false; 1 << depth];
    for row in class.rows() {
        let mut node = 0usize;
        for _ in 0..depth {
            node = 2 * node + if row.contains(labels[node]) { 2 } else { 1 };
        }
        realized[node + 1 - (1 << depth)] = true;
    }
    realized.into_iter().all(|r| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dims::{check_exact_witness, ldim};
    use crate::generate;

    #[test]
    fn examples() {
        let s = generate::singleton("01").unwrap();
        assert_eq!(ldim_oracle(&s, 2).unwrap().value, 0);
        let f2 = generate::full(2).unwrap();
        let r = ldim_oracle(&f2, 2).unwrap();
        assert_eq!(r.value, 2);
        assert!(check_exact_witness(&f2, &r));
    }

    #[test]
    fn agrees_with_engine_on_four_point_samples() {
        for seed in 0..20 {
            let c = generate::random(4, 1 + (seed as usize % 12), seed).unwrap();
            assert_eq!(ldim_oracle(&c, 3).unwrap().value, ldim(&c).value);
        }
    }

    #[test]
    fn cap_is_reported() {
        // depths 1..3 succeed, depth 4 would need 5^15 trees
        let c = generate::full(5).unwrap();
        assert!(matches!(ldim_oracle(&c, 4), Err(Error::Resource { .. })));
    }
}
