use std::collections::VecDeque;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::vote::first_splitting_point;
use crate::bits::HypSet;
use crate::class::HypothesisClass;
use crate::dims::{good_tree_depth, virtual_elements, Caps, LdimEngine, VirtualElements};
use crate::epsilon::Epsilon;
use crate::error::{Error, Result};
use crate::par;

/// Three-way answer of an excellence check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Excellence {
    Excellent,
    /// `witness` is ε-good but splits the set's votes with both sides at
    /// least an ε fraction.
    Violated { witness: Vec<usize>, ones: usize, zeros: usize },
    /// Some candidate witnesses were left unchecked.
    Indeterminate { checked: u64 },
}

impl Excellence {
    pub fn is_excellent(&self) -> bool {
        matches!(self, Excellence::Excellent)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// A point splits the set with both sides at least an ε fraction.
    NotGood,
    /// A point splits the set with both sides of smaller dimension.
    NotOpinionated,
    /// The dimension-preserving side of a point is the counting minority.
    Disagree,
    /// An ε-good point set splits the set's votes.
    NotExcellent,
    /// Replaced by a subset with the requested property.
    Property,
    /// A half-space side that is not large relative to the set.
    NotLarge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub kind: StepKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
    /// Label (or vote) of the side kept.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kept: Option<u8>,
    pub size_before: usize,
    pub size_after: usize,
    pub ldim_before: i32,
    pub ldim_after: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Extraction {
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    pub steps: Vec<Step>,
    /// Claimed size guarantee `|output| ≥ ε^exponent · |input|`.
    pub exponent: u32,
    pub bound_holds: bool,
    #[serde(skip)]
    pub set: HypSet,
}

/// Shared state for the extraction recursions on one class: the dimension
/// memo and, lazily, the ε-good point sets used as excellence witnesses.
pub struct Extractor<'a> {
    class: &'a HypothesisClass,
    eps: Epsilon,
    caps: Caps,
    /// Largest witness set for excellence checks; `None` means no limit.
    max_witness_size: Option<usize>,
    engine: LdimEngine,
    witnesses: OnceLock<VirtualElements>,
    d_eps: OnceLock<i64>,
}

impl<'a> Extractor<'a> {
    pub fn new(class: &'a HypothesisClass, eps: Epsilon) -> Self {
        Self::with_caps(class, eps, Caps::default(), None)
    }

    pub fn with_caps(
        class: &'a HypothesisClass,
        eps: Epsilon,
        caps: Caps,
        max_witness_size: Option<usize>,
    ) -> Self {
        Extractor {
            class,
            eps,
            caps,
            max_witness_size,
            engine: LdimEngine::new(class),
            witnesses: OnceLock::new(),
            d_eps: OnceLock::new(),
        }
    }

    pub fn class(&self) -> &HypothesisClass {
        self.class
    }

    pub fn eps(&self) -> Epsilon {
        self.eps
    }

    pub fn engine(&self) -> &LdimEngine {
        &self.engine
    }

    pub fn ldim(&self, set: &HypSet) -> i32 {
        self.engine.ldim(set)
    }

    /// Dimension of the whole class.
    pub fn d(&self) -> u32 {
        self.engine.ldim_all().max(0) as u32
    }

    /// Tree depth bounding the excellence recursion.
    pub fn d_eps(&self) -> u32 {
        *self
            .d_eps
            .get_or_init(|| good_tree_depth(self.class, self.eps, &self.caps).value.max(0))
            as u32
    }

    fn witnesses(&self) -> &VirtualElements {
        self.witnesses.get_or_init(|| {
            virtual_elements(self.class, self.eps, self.max_witness_size, self.caps.node_budget)
        })
    }

    fn check_nonempty(&self, set: &HypSet) -> Result<()> {
        if set.len() != self.class.len() {
            return Err(Error::domain(format!(
                "hypothesis set over {} indices for a class of {}",
                set.len(),
                self.class.len()
            )));
        }
        if set.is_empty() {
            return Err(Error::domain("extraction from an empty hypothesis set"));
        }
        Ok(())
    }

    pub fn is_good(&self, set: &HypSet) -> bool {
        first_splitting_point(set, self.class, self.eps).is_none()
    }

    /// Exactly one side of every point's split has smaller dimension.
    pub fn is_opinionated(&self, set: &HypSet) -> bool {
        self.not_opinionated_at(set).is_none()
    }

    fn not_opinionated_at(&self, set: &HypSet) -> Option<usize> {
        let d = self.ldim(set);
        (0..self.class.domain_size()).find(|&x| {
            let (s0, s1) = self.engine.split(set, x);
            (self.ldim(&s0) < d) == (self.ldim(&s1) < d)
        })
    }

    /// For every point and label: the side keeps the dimension exactly when
    /// it holds at least a `1 − ε` share.
    pub fn majorities_agree(&self, set: &HypSet) -> bool {
        self.disagreement_at(set).is_none()
    }

    fn disagreement_at(&self, set: &HypSet) -> Option<usize> {
        let d = self.ldim(set);
        let total = set.count();
        (0..self.class.domain_size()).find(|&x| {
            let (s0, s1) = self.engine.split(set, x);
            [s0, s1].iter().any(|side| {
                (self.ldim(side) == d) != self.eps.co_at_least(side.count(), total)
            })
        })
    }

    pub fn excellence(&self, set: &HypSet) -> Excellence {
        let w = self.witnesses();
        let total = set.count();
        let violations = par::map_range(0..w.subsets.len(), |i| {
            let ones = w.votes[i].intersection_count(set);
            let zeros = total - ones;
            (!self.eps.below(ones, total) && !self.eps.below(zeros, total)).then_some((i, ones, zeros))
        });
        let first = violations
            .into_iter()
            .flatten()
            .min_by(|a, b| w.subsets[a.0].cmp(&w.subsets[b.0]));
        match first {
            Some((i, ones, zeros)) => Excellence::Violated {
                witness: w.subsets[i].clone(),
                ones,
                zeros,
            },
            None => {
                let exhaustive = w.complete
                    && self
                        .max_witness_size
                        .is_none_or(|s| s >= self.class.domain_size());
                if exhaustive {
                    Excellence::Excellent
                } else {
                    Excellence::Indeterminate { checked: w.examined }
                }
            }
        }
    }

    fn finish(&self, input: &HypSet, set: HypSet, steps: Vec<Step>, exponent: u32) -> Extraction {
        let bound_holds = self.eps.power_bound_holds(set.count(), exponent, input.count());
        Extraction {
            input: input.to_indices(),
            output: set.to_indices(),
            steps,
            exponent,
            bound_holds,
            set,
        }
    }

    /// Side of `x` to keep: smaller dimension, then larger, then label 0.
    fn prefer_smaller_ldim(&self, set: &HypSet, x: usize) -> (u8, HypSet) {
        let (s0, s1) = self.engine.split(set, x);
        let key = |s: &HypSet| (self.ldim(s), std::cmp::Reverse(s.count()));
        if key(&s1) < key(&s0) {
            (1, s1)
        } else {
            (0, s0)
        }
    }

    fn step(&self, kind: StepKind, before: &HypSet, after: &HypSet) -> Step {
        Step {
            kind,
            point: None,
            witness: None,
            kept: None,
            size_before: before.count(),
            size_after: after.count(),
            ldim_before: self.ldim(before),
            ldim_after: self.ldim(after),
        }
    }

    /// An ε-good subset of `set` of size at least `ε^d · |set|`, `d` the
    /// dimension of `set`.
    pub fn extract_good(&self, set: &HypSet) -> Result<Extraction> {
        self.check_nonempty(set)?;
        let mut g = set.clone();
        let mut steps = Vec::new();
        while let Some(x) = first_splitting_point(&g, self.class, self.eps) {
            let (label, next) = self.prefer_smaller_ldim(&g, x);
            let mut s = self.step(StepKind::NotGood, &g, &next);
            s.point = Some(x);
            s.kept = Some(label);
            steps.push(s);
            g = next;
        }
        let exponent = self.ldim(set).max(0) as u32;
        Ok(self.finish(set, g, steps, exponent))
    }

    /// An ε-excellent subset of `set`.
    ///
    /// Explores the tree of vote splits breadth first, so the answer sits at
    /// the smallest depth where some split is excellent. A non-excellent tree
    /// of depth `D + 1` would be a shattered tree of ε-good sets, so the depth
    /// found is at most `d_ε` and the size is at least `ε^{d_ε} · |set|`.
    pub fn extract_excellent(&self, set: &HypSet) -> Result<Extraction> {
        self.check_nonempty(set)?;
        struct Node {
            set: HypSet,
            steps: Vec<Step>,
        }
        let mut queue = VecDeque::from([Node {
            set: set.clone(),
            steps: Vec::new(),
        }]);
        while let Some(node) = queue.pop_front() {
            match self.excellence(&node.set) {
                Excellence::Excellent => {
                    let exponent = self.d_eps();
                    return Ok(self.finish(set, node.set, node.steps, exponent));
                }
                Excellence::Indeterminate { checked } => {
                    return Err(Error::Indeterminate(format!(
                        "excellence of a {}-element set after {checked} candidate witnesses",
                        node.set.count()
                    )))
                }
                Excellence::Violated { witness, .. } => {
                    let b = self.class.point_set(&witness)?;
                    let ones = super::vote::vote_column(self.class, &b, self.eps).intersection(&node.set);
                    let zeros = node.set.difference(&ones);
                    let mut children = [(0u8, zeros), (1u8, ones)];
                    children.sort_by_key(|(v, s)| (self.ldim(s), std::cmp::Reverse(s.count()), *v));
                    for (vote, child) in children {
                        let mut steps = node.steps.clone();
                        let mut s = self.step(StepKind::NotExcellent, &node.set, &child);
                        s.witness = Some(witness.clone());
                        s.kept = Some(vote);
                        steps.push(s);
                        queue.push_back(Node { set: child, steps });
                    }
                }
            }
        }
        unreachable!("a singleton is excellent")
    }

    /// The half-space step of the agreement recursion, or `None` when `set`
    /// is opinionated and its majorities agree. Assumes `set` is ε-good.
    fn agreement_step(&self, set: &HypSet) -> Option<Step> {
        if let Some(x) = self.not_opinionated_at(set) {
            let (s0, s1) = self.engine.split(set, x);
            let (label, next) = if s1.count() > s0.count() { (1, s1) } else { (0, s0) };
            let mut s = self.step(StepKind::NotOpinionated, set, &next);
            s.point = Some(x);
            s.kept = Some(label);
            return Some(s);
        }
        if let Some(x) = self.disagreement_at(set) {
            let (s0, s1) = self.engine.split(set, x);
            let (label, next) = if s1.count() > s0.count() { (1, s1) } else { (0, s0) };
            let mut s = self.step(StepKind::Disagree, set, &next);
            s.point = Some(x);
            s.kept = Some(label);
            return Some(s);
        }
        None
    }

    fn side(&self, set: &HypSet, step: &Step) -> HypSet {
        self.engine.side(set, step.point.expect("half-space step"), step.kept.expect("label"))
    }

    /// A subset that is ε-good (or has `property`), Littlestone-opinionated,
    /// and on which the two majorities agree at every point.
    pub fn extract_agreeing(&self, set: &HypSet, property: Option<&dyn GoodProperty>) -> Result<Extraction> {
        self.check_nonempty(set)?;
        let mut a = set.clone();
        let mut steps = Vec::new();
        loop {
            match property {
                None => {
                    if let Some(x) = first_splitting_point(&a, self.class, self.eps) {
                        let (label, next) = self.prefer_smaller_ldim(&a, x);
                        let mut s = self.step(StepKind::NotGood, &a, &next);
                        s.point = Some(x);
                        s.kept = Some(label);
                        steps.push(s);
                        a = next;
                        continue;
                    }
                }
                Some(p) => {
                    if !p.holds(self, &a)? {
                        let inner = p.extract(self, &a)?;
                        if !p.holds(self, &inner.set)? || !self.is_good(&inner.set) {
                            return Err(Error::contract(format!(
                                "property `{}` extraction returned a set without the property",
                                p.name()
                            )));
                        }
                        let mut s = self.step(StepKind::Property, &a, &inner.set);
                        s.witness = Some(inner.output.clone());
                        steps.push(s);
                        a = inner.set;
                    }
                }
            }
            match self.agreement_step(&a) {
                Some(s) => {
                    a = self.side(&a, &s);
                    steps.push(s);
                }
                None => break,
            }
        }
        let c = property.map_or(0, |p| p.exponent(self));
        let exponent = (c + 1) * self.ldim(set).max(0) as u32;
        Ok(self.finish(set, a, steps, exponent))
    }
}

/// A property of hypothesis sets implying ε-goodness, with an extraction
/// routine keeping at least an `ε^exponent` fraction.
pub trait GoodProperty: Sync {
    fn name(&self) -> &'static str;
    fn holds(&self, ex: &Extractor, set: &HypSet) -> Result<bool>;
    fn extract(&self, ex: &Extractor, set: &HypSet) -> Result<Extraction>;
    fn exponent(&self, ex: &Extractor) -> u32;
}

/// ε-goodness, extracted by [`Extractor::extract_good`].
pub struct Goodness;

impl GoodProperty for Goodness {
    fn name(&self) -> &'static str {
        "good"
    }

    fn holds(&self, ex: &Extractor, set: &HypSet) -> Result<bool> {
        Ok(ex.is_good(set))
    }

    fn extract(&self, ex: &Extractor, set: &HypSet) -> Result<Extraction> {
        ex.extract_good(set)
    }

    fn exponent(&self, ex: &Extractor) -> u32 {
        ex.d()
    }
}

/// ε-excellence, extracted by [`Extractor::extract_excellent`].
pub struct Excellent;

impl GoodProperty for Excellent {
    fn name(&self) -> &'static str {
        "excellent"
    }

    fn holds(&self, ex: &Extractor, set: &HypSet) -> Result<bool> {
        match ex.excellence(set) {
            Excellence::Excellent => Ok(true),
            Excellence::Violated { .. } => Ok(false),
            Excellence::Indeterminate { checked } => Err(Error::Indeterminate(format!(
                "excellence undecided after {checked} candidate witnesses"
            ))),
        }
    }

    fn extract(&self, ex: &Extractor, set: &HypSet) -> Result<Extraction> {
        ex.extract_excellent(set)
    }

    fn exponent(&self, ex: &Extractor) -> u32 {
        ex.d_eps()
    }
}

pub fn is_excellent_subset(
    set: &HypSet,
    class: &HypothesisClass,
    eps: Epsilon,
    max_witness_size: Option<usize>,
) -> Result<Excellence> {
    let ex = Extractor::with_caps(class, eps, Caps::default(), max_witness_size);
    ex.check_nonempty(set)?;
    Ok(ex.excellence(set))
}

pub fn is_opinionated(set: &HypSet, class: &HypothesisClass) -> Result<bool> {
    // ε plays no part in the dimension comparisons
    let ex = Extractor::new(class, Epsilon::new(1, 4).expect("valid"));
    ex.check_nonempty(set)?;
    Ok(ex.is_opinionated(set))
}

pub fn extract_good(set: &HypSet, class: &HypothesisClass, eps: Epsilon) -> Result<Extraction> {
    Extractor::new(class, eps).extract_good(set)
}

pub fn extract_excellent(
    set: &HypSet,
    class: &HypothesisClass,
    eps: Epsilon,
    caps: Caps,
) -> Result<Extraction> {
    Extractor::with_caps(class, eps, caps, None).extract_excellent(set)
}

pub fn extract_agreeing(
    set: &HypSet,
    class: &HypothesisClass,
    eps: Epsilon,
    property: Option<&dyn GoodProperty>,
) -> Result<Extraction> {
    Extractor::new(class, eps).extract_agreeing(set, property)
}
