use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::extract::{Extraction, Extractor, GoodProperty, StepKind};
use crate::bits::HypSet;
use crate::class::HypothesisClass;
use crate::dims::LdimEngine;
use crate::error::{Error, Result};

/// A notion of "`b` is a large subset of `a`" on hypothesis sets, with a
/// declared bound on descending chains of non-large steps.
pub trait LargenessRelation: Sync {
    fn name(&self) -> &str;
    /// Only asked for `b ⊆ a`.
    fn large(&self, b: &HypSet, a: &HypSet) -> bool;
    fn chain_bound(&self) -> usize;
}

/// Large means equal Littlestone dimension.
pub struct LdimLargeness {
    engine: LdimEngine,
    d: usize,
}

pub fn ldim_largeness(class: &HypothesisClass) -> LdimLargeness {
    let engine = LdimEngine::new(class);
    let d = engine.ldim_all().max(0) as usize;
    LdimLargeness { engine, d }
}

impl LargenessRelation for LdimLargeness {
    fn name(&self) -> &str {
        "ldim"
    }

    fn large(&self, b: &HypSet, a: &HypSet) -> bool {
        self.engine.ldim(b) == self.engine.ldim(a)
    }

    fn chain_bound(&self) -> usize {
        self.d
    }
}

/// Large means at least half the elements. Violates non-contradiction on
/// any even split; kept as a negative control.
pub struct HalfLargeness {
    pub declared_bound: usize,
}

impl LargenessRelation for HalfLargeness {
    fn name(&self) -> &str {
        "half"
    }

    fn large(&self, b: &HypSet, a: &HypSet) -> bool {
        2 * b.count() >= a.count()
    }

    fn chain_bound(&self) -> usize {
        self.declared_bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomResult {
    pub axiom: String,
    pub holds: bool,
    /// Hypothesis index sets of the first counterexample found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub relation: String,
    pub exhaustive: bool,
    /// Nested triples `c ⊆ b ⊆ a` examined.
    pub checked: u64,
    /// Distinct pairs `b ⊆ a` among them.
    pub pairs: u64,
    /// Longest chain of nonempty sets with non-large steps, counted in steps.
    pub longest_chain: usize,
    pub axioms: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.axioms.iter().all(|a| a.holds)
    }
}

struct Tally {
    first: [Option<Vec<Vec<usize>>>; 5],
}

impl Tally {
    fn fail(&mut self, axiom: usize, sets: &[&HypSet]) {
        if self.first[axiom].is_none() {
            self.first[axiom] = Some(sets.iter().map(|s| s.to_indices()).collect());
        }
    }
}

const AXIOMS: [&str; 5] = [
    "monotone_in_set",
    "monotone_in_superset",
    "identity",
    "non_contradiction",
    "chain_bound",
];

fn check_triple(m: &dyn LargenessRelation, c: &HypSet, b: &HypSet, a: &HypSet, tally: &mut Tally) {
    if m.large(c, a) {
        if !m.large(b, a) {
            tally.fail(0, &[c, b, a]);
        }
        if !m.large(c, b) {
            tally.fail(1, &[c, b, a]);
        }
    }
}

fn check_set(m: &dyn LargenessRelation, class: &HypothesisClass, a: &HypSet, tally: &mut Tally) {
    if !m.large(a, a) {
        tally.fail(2, &[a]);
    }
    if a.is_empty() {
        return;
    }
    for x in 0..class.domain_size() {
        let ones = a.intersection(class.col(x));
        let zeros = a.difference(class.col(x));
        if m.large(&ones, a) && m.large(&zeros, a) {
            tally.fail(3, &[&ones, &zeros, a]);
        }
    }
}

/// Checks the five largeness axioms on `class`.
///
/// Exhaustive when all `4^m` nested triples fit in `cap`; otherwise checks
/// `cap` seeded random triples and random descending chains, and flags the
/// report as non-exhaustive.
pub fn check_axioms(
    m: &dyn LargenessRelation,
    class: &HypothesisClass,
    cap: u64,
    seed: u64,
) -> AxiomReport {
    let size = class.len();
    let mut tally = Tally {
        first: Default::default(),
    };
    let triples = 4u128.checked_pow(size as u32).unwrap_or(u128::MAX);
    let exhaustive = size < 32 && triples <= cap as u128;
    let mut checked = 0u64;
    let mut pairs = 0u64;
    let longest_chain;
    if exhaustive {
        let count = 1u64 << size;
        let set = |mask: u64| HypSet::from_mask(size, mask);
        for a_mask in 0..count {
            let a = set(a_mask);
            check_set(m, class, &a, &mut tally);
            // b ⊆ a, then c ⊆ b, by submask enumeration
            let mut b_mask = a_mask;
            loop {
                let b = set(b_mask);
                pairs += 1;
                let mut c_mask = b_mask;
                loop {
                    check_triple(m, &set(c_mask), &b, &a, &mut tally);
                    checked += 1;
                    if c_mask == 0 {
                        break;
                    }
                    c_mask = (c_mask - 1) & b_mask;
                }
                if b_mask == 0 {
                    break;
                }
                b_mask = (b_mask - 1) & a_mask;
            }
        }
        // longest[a] = most non-large steps down from `a` through nonempty sets
        let mut longest = vec![0usize; count as usize];
        let mut witness_next = vec![None; count as usize];
        for a_mask in 1..count {
            let a = set(a_mask);
            let mut b_mask = (a_mask - 1) & a_mask;
            while b_mask != 0 {
                if !m.large(&set(b_mask), &a) && longest[b_mask as usize] + 1 > longest[a_mask as usize] {
                    longest[a_mask as usize] = longest[b_mask as usize] + 1;
                    witness_next[a_mask as usize] = Some(b_mask);
                }
                b_mask = (b_mask - 1) & a_mask;
            }
        }
        let (top, &len) = longest
            .iter()
            .enumerate()
            .max_by_key(|&(i, &l)| (l, std::cmp::Reverse(i)))
            .unwrap_or((0, &0));
        longest_chain = len;
        if len > m.chain_bound() {
            let mut chain = vec![set(top as u64)];
            let mut cur = top;
            while let Some(next) = witness_next[cur] {
                chain.push(set(next));
                cur = next as usize;
            }
            let refs: Vec<&HypSet> = chain.iter().collect();
            tally.fail(4, &refs);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random_subset = |rng: &mut ChaCha8Rng, of: &HypSet| {
            let mut s = HypSet::new(size);
            for h in of.iter() {
                if rng.gen::<bool>() {
                    s.insert(h);
                }
            }
            s
        };
        let all = class.all();
        for _ in 0..cap {
            let a = random_subset(&mut rng, &all);
            let b = random_subset(&mut rng, &a);
            let c = random_subset(&mut rng, &b);
            check_set(m, class, &a, &mut tally);
            check_triple(m, &c, &b, &a, &mut tally);
            checked += 1;
            pairs += 1;
        }
        // random descending chains, removing one element at a time
        let mut best = 0;
        for _ in 0..cap.min(10_000) {
            let mut a = all.clone();
            let mut steps = 0;
            let mut chain = vec![a.clone()];
            while a.count() > 1 {
                let idx = a.to_indices();
                let mut b = a.clone();
                b.remove(idx[rng.gen_range(0..idx.len())]);
                if !m.large(&b, &a) {
                    steps += 1;
                    chain.push(b.clone());
                }
                a = b;
            }
            if steps > best {
                best = steps;
                if best > m.chain_bound() {
                    let refs: Vec<&HypSet> = chain.iter().collect();
                    tally.fail(4, &refs);
                }
            }
        }
        longest_chain = best;
    }
    let axioms = AXIOMS
        .iter()
        .zip(tally.first)
        .map(|(name, ce)| AxiomResult {
            axiom: name.to_string(),
            holds: ce.is_none(),
            counterexample: ce,
        })
        .collect();
    AxiomReport {
        relation: m.name().to_string(),
        exhaustive,
        checked,
        pairs,
        longest_chain,
        axioms,
    }
}

impl Extractor<'_> {
    /// A subset with `property` on which every half-space split has exactly
    /// one `m`-large side, and `m`-largeness of a side coincides with holding
    /// a `1 − ε` share.
    pub fn extract_largeness_agreeing(
        &self,
        set: &HypSet,
        m: &dyn LargenessRelation,
        property: &dyn GoodProperty,
    ) -> Result<Extraction> {
        if set.is_empty() || set.len() != self.class().len() {
            return Err(Error::domain("largeness extraction needs a nonempty hypothesis set"));
        }
        let class = self.class();
        let eps = self.eps();
        let mut a = set.clone();
        let mut steps = Vec::new();
        let mut rounds = 0usize;
        loop {
            if !property.holds(self, &a)? {
                let inner = property.extract(self, &a)?;
                if !property.holds(self, &inner.set)? || !self.is_good(&inner.set) {
                    return Err(Error::contract(format!(
                        "property `{}` extraction returned a set without the property",
                        property.name()
                    )));
                }
                steps.push(super::extract::Step {
                    kind: StepKind::Property,
                    point: None,
                    witness: Some(inner.output.clone()),
                    kept: None,
                    size_before: a.count(),
                    size_after: inner.set.count(),
                    ldim_before: self.ldim(&a),
                    ldim_after: self.ldim(&inner.set),
                });
                a = inner.set;
            }
            let total = a.count();
            let splits = |x: usize| (a.difference(class.col(x)), a.intersection(class.col(x)));
            // condition 2 failures first, then condition 3
            let no_large_side = (0..class.domain_size()).find(|&x| {
                let (s0, s1) = splits(x);
                !m.large(&s0, &a) && !m.large(&s1, &a)
            });
            let disagreement = || {
                (0..class.domain_size()).find(|&x| {
                    let (s0, s1) = splits(x);
                    [&s0, &s1]
                        .iter()
                        .any(|s| m.large(s, &a) != eps.co_at_least(s.count(), total))
                })
            };
            let Some(x) = no_large_side.or_else(disagreement) else {
                break;
            };
            let (s0, s1) = splits(x);
            let eligible =
                |s: &HypSet| eps.at_least(s.count(), total) && !m.large(s, &a);
            let (label, next) = match (eligible(&s0), eligible(&s1)) {
                (true, true) if s1.count() > s0.count() => (1, s1),
                (true, _) => (0, s0),
                (false, true) => (1, s1),
                (false, false) => {
                    return Err(Error::contract(format!(
                        "no eligible non-large side at point {x}; the relation breaks its axioms"
                    )))
                }
            };
            steps.push(super::extract::Step {
                kind: StepKind::NotLarge,
                point: Some(x),
                witness: None,
                kept: Some(label),
                size_before: total,
                size_after: next.count(),
                ldim_before: self.ldim(&a),
                ldim_after: self.ldim(&next),
            });
            a = next;
            rounds += 1;
            if rounds > m.chain_bound() {
                return Err(Error::contract(format!(
                    "more than {} non-large steps; the chain bound is violated",
                    m.chain_bound()
                )));
            }
        }
        let c = property.exponent(self);
        let exponent = (c + 1) * m.chain_bound() as u32;
        let bound_holds = eps.power_bound_holds(a.count(), exponent, set.count());
        Ok(Extraction {
            input: set.to_indices(),
            output: a.to_indices(),
            steps,
            exponent,
            bound_holds,
            set: a,
        })
    }
}

/// Checks the three conclusions of the largeness extraction on `a`:
/// ε-good, exactly one large side per half-space split, and largeness equal
/// to holding a `1 − ε` share.
pub fn largeness_conditions_hold(ex: &Extractor, m: &dyn LargenessRelation, a: &HypSet) -> bool {
    let class = ex.class();
    let total = a.count();
    ex.is_good(a)
        && (0..class.domain_size()).all(|x| {
            let s1 = a.intersection(class.col(x));
            let s0 = a.difference(class.col(x));
            let (l0, l1) = (m.large(&s0, a), m.large(&s1, a));
            l0 != l1
                && l0 == ex.eps().co_at_least(s0.count(), total)
                && l1 == ex.eps().co_at_least(s1.count(), total)
        })
}
