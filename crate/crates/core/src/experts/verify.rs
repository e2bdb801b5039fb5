use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ExpertFamily, FamilyWalk};
use crate::class::HypothesisClass;
use crate::error::{Error, Result};
use crate::generate;
use crate::par;

/// Failures kept verbatim in a report; the rest are only counted.
pub const MAX_REPORTED_FAILURES: usize = 16;

/// Tree checks enumerate all `2^T` branches, so horizons stay small.
const MAX_TREE_HORIZON: usize = 20;

const CHUNK: usize = 1024;

/// Where the point-labeled trees come from. Trees are label vectors in heap
/// order (children of node `i` at `2i + 1` and `2i + 2`).
#[derive(Clone, Debug)]
pub enum TreeSource {
    /// All `n^(2^T − 1)` trees; a resource error past `cap`.
    Exhaustive { cap: u128 },
    /// `count` trees with labels drawn uniformly from a seeded stream.
    Sampled { count: usize, seed: u64 },
    /// Exhaustive within `cap`, sampled otherwise.
    Auto { cap: u128, count: usize, seed: u64 },
    Explicit(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverFailure {
    pub tree: Vec<usize>,
    pub hypothesis: usize,
    /// The hypothesis's branch, root bit first.
    pub branch: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverReport {
    pub family_size: usize,
    pub horizon: usize,
    pub max_round_set: i64,
    pub mode: &'static str,
    pub seed: Option<u64>,
    pub trees_checked: u64,
    pub pairs_checked: u64,
    pub failure_count: u64,
    pub failures: Vec<CoverFailure>,
}

impl CoverReport {
    pub fn covered(&self) -> bool {
        self.failure_count == 0
    }
}

fn tree_count(n: usize, horizon: usize) -> Option<u128> {
    let nodes = u32::try_from((1u64 << horizon) - 1).ok()?;
    (n as u128).checked_pow(nodes)
}

fn decode_tree(mut index: u128, n: usize, nodes: usize) -> Vec<usize> {
    let mut labels = vec![0; nodes];
    for slot in labels.iter_mut() {
        *slot = (index % n as u128) as usize;
        index /= n as u128;
    }
    labels
}

fn sample_trees(n: usize, nodes: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..nodes).map(|_| rng.gen_range(0..n)).collect())
        .collect()
}

/// Branches walked by the family's experts on one tree, as a bitmap over
/// branch indices (root bit most significant).
///
/// Experts travel in groups: all experts at the same node share a version
/// space, so each node costs two dimension calls.
pub(crate) fn realized_branches(family: &ExpertFamily, labels: &[usize]) -> Vec<bool> {
    let t = family.horizon();
    let engine = family.engine();
    let mut hit = vec![false; 1 << t];
    let group: Vec<u32> = (0..family.len() as u32).collect();
    let mut stack = vec![(0usize, 0usize, engine.all(), group)];
    while let Some((level, node, state, group)) = stack.pop() {
        if group.is_empty() {
            continue;
        }
        if level == t {
            // Node indices of the last level run from 2^t − 1 in branch order.
            hit[node + 1 - (1 << t)] = true;
            continue;
        }
        let x = labels[node];
        let (zeros, ones) = engine.split(&state, x);
        let (d0, d1) = (engine.ldim(&zeros), engine.ldim(&ones));
        let mut left = Vec::new();
        let mut right = Vec::new();
        for e in group {
            let in_set = family.expert(e as usize).in_set(level);
            let bit = super::rule(in_set, d0, d1);
            if bit == 1 {
                right.push(e);
            } else {
                left.push(e);
            }
        }
        stack.push((level + 1, 2 * node + 2, ones, right));
        stack.push((level + 1, 2 * node + 1, zeros, left));
    }
    hit
}

fn hypothesis_branch(class: &HypothesisClass, labels: &[usize], h: usize, t: usize) -> usize {
    let mut node = 0;
    let mut branch = 0;
    for _ in 0..t {
        let bit = class.value(h, labels[node]) as usize;
        branch = (branch << 1) | bit;
        node = 2 * node + 1 + bit;
    }
    branch
}

fn branch_string(branch: usize, t: usize) -> String {
    (0..t)
        .rev()
        .map(|b| if (branch >> b) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[derive(Default)]
struct Tally {
    trees: u64,
    pairs: u64,
    count: u64,
    failures: Vec<CoverFailure>,
}

impl Tally {
    fn merge(&mut self, other: Tally) {
        self.trees += other.trees;
        self.pairs += other.pairs;
        self.count += other.count;
        for f in other.failures {
            if self.failures.len() < MAX_REPORTED_FAILURES {
                self.failures.push(f);
            }
        }
    }
}

fn check_tree(family: &ExpertFamily, labels: &[usize]) -> Tally {
    let class = family.class();
    let t = family.horizon();
    let hit = realized_branches(family, labels);
    let mut tally = Tally {
        trees: 1,
        pairs: class.len() as u64,
        ..Tally::default()
    };
    for h in 0..class.len() {
        let b = hypothesis_branch(class, labels, h, t);
        if !hit[b] {
            tally.count += 1;
            if tally.failures.len() < MAX_REPORTED_FAILURES {
                tally.failures.push(CoverFailure {
                    tree: labels.to_vec(),
                    hypothesis: h,
                    branch: branch_string(b, t),
                });
            }
        }
    }
    tally
}

/// Checks that every (tree, hypothesis) branch is walked by some expert.
pub fn verify_cover(family: &ExpertFamily, source: &TreeSource) -> Result<CoverReport> {
    let t = family.horizon();
    if t > MAX_TREE_HORIZON {
        return Err(Error::domain(format!(
            "tree checks support horizons up to {MAX_TREE_HORIZON}, got {t}"
        )));
    }
    let n = family.class().domain_size();
    let nodes = (1usize << t) - 1;
    let exhaustive_count = |cap: u128| tree_count(n, t).filter(|&c| c <= cap);
    let (mode, seed, tally) = match source {
        TreeSource::Exhaustive { cap } => {
            let count = exhaustive_count(*cap).ok_or(Error::Resource {
                cap: "tree_count",
                needed: tree_count(n, t).unwrap_or(u128::MAX),
                limit: *cap,
            })?;
            ("exhaustive", None, exhaustive(family, n, nodes, count))
        }
        TreeSource::Auto { cap, count, seed } => match exhaustive_count(*cap) {
            Some(c) => ("exhaustive", None, exhaustive(family, n, nodes, c)),
            None => ("sampled", Some(*seed), sampled(family, n, nodes, *count, *seed)?),
        },
        TreeSource::Sampled { count, seed } => {
            ("sampled", Some(*seed), sampled(family, n, nodes, *count, *seed)?)
        }
        TreeSource::Explicit(trees) => {
            for tree in trees {
                if tree.len() != nodes || tree.iter().any(|&x| x >= n) {
                    return Err(Error::domain(format!(
                        "a height-{t} tree needs {nodes} labels below {n}"
                    )));
                }
            }
            let parts = par::map_slice(trees, |tree| check_tree(family, tree));
            let mut tally = Tally::default();
            for p in parts {
                tally.merge(p);
            }
            ("explicit", None, tally)
        }
    };
    Ok(CoverReport {
        family_size: family.len(),
        horizon: t,
        max_round_set: family.max_round_set(),
        mode,
        seed,
        trees_checked: tally.trees,
        pairs_checked: tally.pairs,
        failure_count: tally.count,
        failures: tally.failures,
    })
}

fn exhaustive(family: &ExpertFamily, n: usize, nodes: usize, count: u128) -> Tally {
    let count = count as usize;
    let chunks = count.div_ceil(CHUNK);
    let parts = par::map_range(0..chunks, |c| {
        let mut tally = Tally::default();
        for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
            tally.merge(check_tree(family, &decode_tree(i as u128, n, nodes)));
        }
        tally
    });
    let mut tally = Tally::default();
    for p in parts {
        tally.merge(p);
    }
    tally
}

fn sampled(family: &ExpertFamily, n: usize, nodes: usize, count: usize, seed: u64) -> Result<Tally> {
    if n == 0 && nodes > 0 {
        return Err(Error::domain("cannot sample trees over an empty domain"));
    }
    let trees = sample_trees(n, nodes, count, seed);
    let parts = par::map_slice(&trees, |tree| check_tree(family, tree));
    let mut tally = Tally::default();
    for p in parts {
        tally.merge(p);
    }
    Ok(tally)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mutation {
    /// Index of the deleted expert, or `None` if no single deletion broke
    /// coverage.
    pub removed: Option<usize>,
    pub round_set: Option<Vec<usize>>,
    pub report: Option<CoverReport>,
}

/// Deletes experts one at a time (in family order) until the cover check
/// fails, and reports the first such deletion.
pub fn mutation_control(family: &ExpertFamily, source: &TreeSource) -> Result<Mutation> {
    for i in 0..family.len() {
        let report = verify_cover(&family.without(i), source)?;
        if !report.covered() {
            return Ok(Mutation {
                removed: Some(i),
                round_set: Some(family.expert(i).round_set().to_vec()),
                report: Some(report),
            });
        }
    }
    Ok(Mutation {
        removed: None,
        round_set: None,
        report: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MistakeReport {
    pub sequence: Vec<usize>,
    pub hypothesis: usize,
    pub branch: Vec<u8>,
    /// Rounds where the hypothesis disagrees with the branch.
    pub mistakes: Vec<usize>,
    pub expert: Option<usize>,
    pub round_set: Option<Vec<usize>>,
}

impl MistakeReport {
    pub fn covered(&self) -> bool {
        self.expert.is_some()
    }
}

/// On the tree whose level `i` is labeled `sequence[i]`, looks for an expert
/// whose rounds of disagreement with `branch` are exactly those of `h`.
pub fn verify_mistake_cover(
    family: &ExpertFamily,
    sequence: &[usize],
    h: usize,
    branch: &[u8],
) -> Result<MistakeReport> {
    let t = family.horizon();
    if sequence.len() != t || branch.len() != t {
        return Err(Error::contract(format!(
            "sequence of length {} and branch of length {} against horizon {t}",
            sequence.len(),
            branch.len()
        )));
    }
    let class = family.class();
    if h >= class.len() {
        return Err(Error::domain(format!("hypothesis {h} out of range for {} hypotheses", class.len())));
    }
    if branch.iter().any(|&b| b > 1) {
        return Err(Error::domain("branch bits must be 0 or 1"));
    }
    let mistakes: Vec<usize> = (0..t)
        .filter(|&i| class.value(h, sequence[i]) != branch[i])
        .collect();
    let table = FamilyWalk::run(family, sequence)?;
    let expert = table.iter().position(|row| {
        (0..t)
            .filter(|&i| row[i] != branch[i])
            .eq(mistakes.iter().copied())
    });
    Ok(MistakeReport {
        sequence: sequence.to_vec(),
        hypothesis: h,
        branch: branch.to_vec(),
        mistakes,
        expert,
        round_set: expert.map(|e| family.expert(e).round_set().to_vec()),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DefeatReport {
    pub horizon: usize,
    pub max_round_set: usize,
    pub family_size: usize,
    pub branches: u64,
    pub realized_branches: u64,
    pub uncovered: u64,
    pub example: Option<CoverFailure>,
}

/// Counting argument: on the full class over `horizon` points, the tree with
/// level `i` labeled by point `i` has all `2^T` branches realized, while a
/// family of round sets of size at most `max_round_set` walks at most one
/// branch per expert.
pub fn counting_defeat(horizon: usize, max_round_set: usize) -> Result<DefeatReport> {
    if horizon > 14 {
        return Err(Error::domain(format!("horizon {horizon} is too large for the full class")));
    }
    let class = generate::full(horizon)?;
    let family = ExpertFamily::truncated(&class, horizon, max_round_set, u128::MAX)?;
    let labels: Vec<usize> = (0..(1usize << horizon) - 1)
        .map(|node| (usize::BITS - 1 - (node + 1).leading_zeros()) as usize)
        .collect();
    let hit = realized_branches(&family, &labels);
    let tally = check_tree(&family, &labels);
    Ok(DefeatReport {
        horizon,
        max_round_set,
        family_size: family.len(),
        branches: 1 << horizon,
        realized_branches: hit.iter().filter(|&&b| b).count() as u64,
        uncovered: tally.count,
        example: tally.failures.into_iter().next(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::build_cover;

    #[test]
    fn decode_is_mixed_radix() {
        assert_eq!(decode_tree(5, 2, 3), vec![1, 0, 1]);
        assert_eq!(tree_count(2, 3), Some(128));
        assert_eq!(tree_count(0, 0), Some(1));
        assert_eq!(tree_count(3, 20), None);
    }

    #[test]
    fn full2_exhaustive_height_two() {
        let f2 = generate::full(2).unwrap();
        let fam = build_cover(&f2, 2).unwrap();
        let r = verify_cover(&fam, &TreeSource::Exhaustive { cap: 1000 }).unwrap();
        assert_eq!(r.trees_checked, 8);
        assert_eq!(r.pairs_checked, 32);
        assert!(r.covered(), "{r:?}");
        let m = mutation_control(&fam, &TreeSource::Exhaustive { cap: 1000 }).unwrap();
        assert!(m.report.unwrap().failure_count >= 1);
    }

    #[test]
    fn threshold4_sampled() {
        let t4 = generate::threshold(4);
        let fam = build_cover(&t4, 3).unwrap();
        let r = verify_cover(&fam, &TreeSource::Sampled { count: 500, seed: 3 }).unwrap();
        assert_eq!(r.trees_checked, 500);
        assert!(r.covered());
    }

    #[test]
    fn over_cap_exhaustive_is_resource() {
        let t4 = generate::threshold(4);
        let fam = build_cover(&t4, 3).unwrap();
        assert!(matches!(
            verify_cover(&fam, &TreeSource::Exhaustive { cap: 10 }),
            Err(Error::Resource { cap: "tree_count", .. })
        ));
        let r = verify_cover(&fam, &TreeSource::Auto { cap: 10, count: 5, seed: 1 }).unwrap();
        assert_eq!((r.mode, r.trees_checked), ("sampled", 5));
    }

    #[test]
    fn mistake_cover_examples() {
        let t8 = generate::threshold(8);
        let fam = build_cover(&t8, 6).unwrap();
        let seq = [3, 6, 1, 7, 0, 4];
        let h = 5;
        let own: Vec<u8> = seq.iter().map(|&x| t8.value(h, x)).collect();
        let r = verify_mistake_cover(&fam, &seq, h, &own).unwrap();
        assert!(r.mistakes.is_empty());
        assert!(r.covered());
        let mut planted = own.clone();
        planted[1] ^= 1;
        planted[4] ^= 1;
        let r = verify_mistake_cover(&fam, &seq, h, &planted).unwrap();
        assert_eq!(r.mistakes, vec![1, 4]);
        assert!(r.covered());
        assert!(matches!(
            verify_mistake_cover(&fam, &seq[..5], h, &planted[..5]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn mistake_cover_full2_exhaustive() {
        let f2 = generate::full(2).unwrap();
        let fam = build_cover(&f2, 3).unwrap();
        let seq = [0, 1, 0];
        for h in 0..4 {
            for b in 0..8u8 {
                let branch: Vec<u8> = (0..3).map(|i| (b >> (2 - i)) & 1).collect();
                assert!(verify_mistake_cover(&fam, &seq, h, &branch).unwrap().covered());
            }
        }
    }

    #[test]
    fn counting_defeat_small() {
        // 2^6 = 64 branches against 1 + 6 + 15 = 22 experts.
        let r = counting_defeat(6, 2).unwrap();
        assert_eq!(r.family_size, 22);
        assert_eq!(r.branches, 64);
        assert!(r.realized_branches <= 22);
        assert_eq!(r.uncovered, 64 - r.realized_branches);
        // Enough round sets cover everything.
        let full = counting_defeat(4, 4).unwrap();
        assert_eq!(full.uncovered, 0);
    }
}
