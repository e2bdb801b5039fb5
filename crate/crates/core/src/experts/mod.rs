//! Prefix-dependent experts parametrized by round sets, and the checks that
//! they cover every branch a hypothesis realizes.

mod verify;

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::bits::HypSet;
use crate::class::HypothesisClass;
use crate::dims::LdimEngine;
use crate::error::{Error, Result};

pub use verify::{
    counting_defeat, mutation_control, verify_cover, verify_mistake_cover, CoverFailure,
    CoverReport, DefeatReport, MistakeReport, Mutation, TreeSource, MAX_REPORTED_FAILURES,
};

/// Default limit on the number of experts in a family.
pub const FAMILY_CAP: u128 = 5_000_000;

/// One adaptive expert: a horizon and the rounds at which it takes the
/// smaller-dimension side.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DynamicExpert {
    horizon: usize,
    round_set: Vec<usize>,
}

impl DynamicExpert {
    pub fn new(horizon: usize, mut round_set: Vec<usize>) -> Result<Self> {
        round_set.sort_unstable();
        round_set.dedup();
        if let Some(&r) = round_set.last() {
            if r >= horizon {
                return Err(Error::domain(format!("round {r} is outside horizon {horizon}")));
            }
        }
        Ok(DynamicExpert { horizon, round_set })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Sorted rounds.
    pub fn round_set(&self) -> &[usize] {
        &self.round_set
    }

    pub fn in_set(&self, round: usize) -> bool {
        self.round_set.binary_search(&round).is_ok()
    }

    /// Output at round `history.len()` on point `x`.
    ///
    /// The history pairs each past point with the bit this expert emitted
    /// there; it is replayed and every bit is checked against the rule.
    pub fn predict(&self, engine: &LdimEngine, history: &[(usize, u8)], x: usize) -> Result<u8> {
        if history.len() >= self.horizon {
            return Err(Error::Horizon {
                round: history.len(),
                horizon: self.horizon,
            });
        }
        let n = engine.domain_size();
        let mut state = engine.all();
        for (round, &(a, bit)) in history.iter().enumerate() {
            if a >= n {
                return Err(Error::domain(format!("point {a} out of range for domain size {n}")));
            }
            let (own, _, _) = decide(engine, &state, a, self.in_set(round));
            if own != bit {
                return Err(Error::contract(format!(
                    "history bit {bit} at round {round} differs from the expert's own output {own}"
                )));
            }
            state = engine.side(&state, a, bit);
        }
        if x >= n {
            return Err(Error::domain(format!("point {x} out of range for domain size {n}")));
        }
        Ok(decide(engine, &state, x, self.in_set(history.len())).0)
    }
}

/// The expert rule at one node: in the round set take the side of smaller
/// dimension (ties to 0), otherwise the larger one (ties to 1). Returns the
/// bit and the two side dimensions.
pub(crate) fn decide(engine: &LdimEngine, state: &HypSet, x: usize, in_set: bool) -> (u8, i32, i32) {
    let (zeros, ones) = engine.split(state, x);
    let d0 = engine.ldim(&zeros);
    let d1 = engine.ldim(&ones);
    (rule(in_set, d0, d1), d0, d1)
}

#[inline]
pub(crate) fn rule(in_set: bool, d0: i32, d1: i32) -> u8 {
    use std::cmp::Ordering::*;
    match (in_set, d0.cmp(&d1)) {
        (true, Greater) => 1,
        (true, _) => 0,
        (false, Less) => 1,
        (false, Greater) => 0,
        (false, Equal) => 1,
    }
}

/// `Σ_{i ≤ k} C(t, i)`, saturating at `u128::MAX`.
pub fn binomial_sum(t: usize, k: i64) -> u128 {
    if k < 0 {
        return 0;
    }
    let k = (k as usize).min(t);
    let mut term: u128 = 1;
    let mut total: u128 = 1;
    for i in 1..=k {
        term = match term.checked_mul((t - i + 1) as u128) {
            Some(v) => v / i as u128,
            None => return u128::MAX,
        };
        total = total.saturating_add(term);
    }
    total
}

/// Increasing sequences over `0..t` of length at most `k`, lexicographic
/// (so `[]`, `[0]`, `[0, 1]`, ..., `[1]`, ...).
fn round_sets(t: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(t: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if cur.len() == k {
            return;
        }
        let start = cur.last().map_or(0, |&r| r + 1);
        for r in start..t {
            cur.push(r);
            rec(t, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(t, k, &mut Vec::new(), &mut out);
    out
}

/// The experts for one class and horizon, with a shared dimension memo.
#[derive(Clone)]
pub struct ExpertFamily {
    class: Arc<HypothesisClass>,
    engine: Arc<LdimEngine>,
    horizon: usize,
    max_round_set: i64,
    experts: Vec<DynamicExpert>,
}

impl std::fmt::Debug for ExpertFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExpertFamily")
            .field("horizon", &self.horizon)
            .field("max_round_set", &self.max_round_set)
            .field("len", &self.experts.len())
            .finish()
    }
}

/// Family with one expert per round set of size at most `Ldim(class)`.
pub fn build_cover(class: &HypothesisClass, horizon: usize) -> Result<ExpertFamily> {
    ExpertFamily::build(class, horizon, FAMILY_CAP)
}

impl ExpertFamily {
    pub fn build(class: &HypothesisClass, horizon: usize, cap: u128) -> Result<Self> {
        let engine = Arc::new(LdimEngine::new(class));
        let d = engine.ldim_par(&engine.all());
        Self::assemble(Arc::new(class.clone()), engine, horizon, d as i64, cap)
    }

    /// Family over an existing memo; `class` must be the engine's class.
    pub fn with_engine(
        class: Arc<HypothesisClass>,
        engine: Arc<LdimEngine>,
        horizon: usize,
        cap: u128,
    ) -> Result<Self> {
        let d = engine.ldim_par(&engine.all());
        Self::assemble(class, engine, horizon, d as i64, cap)
    }

    /// Same rule, but round sets capped at `max_round_set` instead of the
    /// class dimension. Too small a cap loses coverage.
    pub fn truncated(class: &HypothesisClass, horizon: usize, max_round_set: usize, cap: u128) -> Result<Self> {
        let engine = Arc::new(LdimEngine::new(class));
        Self::assemble(Arc::new(class.clone()), engine, horizon, max_round_set as i64, cap)
    }

    fn assemble(
        class: Arc<HypothesisClass>,
        engine: Arc<LdimEngine>,
        horizon: usize,
        max_round_set: i64,
        cap: u128,
    ) -> Result<Self> {
        let size = binomial_sum(horizon, max_round_set);
        if size > cap {
            return Err(Error::Resource {
                cap: "family_size",
                needed: size,
                limit: cap,
            });
        }
        let experts = if max_round_set < 0 {
            Vec::new()
        } else {
            round_sets(horizon, max_round_set as usize)
                .into_iter()
                .map(|round_set| DynamicExpert { horizon, round_set })
                .collect()
        };
        debug_assert_eq!(experts.len() as u128, size);
        Ok(ExpertFamily {
            class,
            engine,
            horizon,
            max_round_set,
            experts,
        })
    }

    pub fn class(&self) -> &HypothesisClass {
        &self.class
    }

    pub fn class_arc(&self) -> &Arc<HypothesisClass> {
        &self.class
    }

    pub fn engine(&self) -> &Arc<LdimEngine> {
        &self.engine
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Largest round-set size; the class dimension unless truncated.
    pub fn max_round_set(&self) -> i64 {
        self.max_round_set
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn experts(&self) -> &[DynamicExpert] {
        &self.experts
    }

    pub fn expert(&self, i: usize) -> &DynamicExpert {
        &self.experts[i]
    }

    /// Copy with expert `i` deleted (a mutation used as a negative control).
    pub fn without(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.experts.remove(i);
        out
    }

    pub fn predict(&self, i: usize, history: &[(usize, u8)], x: usize) -> Result<u8> {
        self.experts[i].predict(&self.engine, history, x)
    }

    pub fn walk(&self) -> FamilyWalk<'_> {
        FamilyWalk::new(self)
    }
}

/// Free-function form of [`DynamicExpert::predict`].
pub fn expert_predict(
    family: &ExpertFamily,
    expert: usize,
    history: &[(usize, u8)],
    x: usize,
) -> Result<u8> {
    family.predict(expert, history, x)
}

/// Per-expert positions for running a whole family along one point
/// sequence, each expert feeding back its own outputs.
///
/// Experts in the same version space share an interned state, so a round
/// costs two dimension calls per distinct state plus O(1) per expert. The
/// family is passed to each call, so the state can live next to an owned
/// family.
#[derive(Clone, Debug)]
pub struct WalkState {
    round: usize,
    states: Vec<HypSet>,
    index: HashMap<HypSet, u32>,
    current: Vec<u32>,
    cursor: Vec<u32>,
}

impl WalkState {
    pub fn new(family: &ExpertFamily) -> Self {
        let all = family.engine.all();
        let mut index = HashMap::new();
        index.insert(all.clone(), 0);
        WalkState {
            round: 0,
            states: vec![all],
            index,
            current: vec![0; family.len()],
            cursor: vec![0; family.len()],
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn distinct_states(&self) -> usize {
        self.states.len()
    }

    fn intern(&mut self, s: HypSet) -> u32 {
        if let Some(&id) = self.index.get(&s) {
            return id;
        }
        let id = self.states.len() as u32;
        self.index.insert(s.clone(), id);
        self.states.push(s);
        id
    }

    /// Each expert's output on `x` this round and the state it moves to.
    fn transitions(&mut self, family: &ExpertFamily, x: usize) -> Result<Vec<(u8, u32)>> {
        let horizon = family.horizon;
        if self.round >= horizon {
            return Err(Error::Horizon {
                round: self.round,
                horizon,
            });
        }
        let n = family.engine.domain_size();
        if x >= n {
            return Err(Error::domain(format!("point {x} out of range for domain size {n}")));
        }
        let engine = &family.engine;
        // state id -> (next state for 0, next state for 1, d0, d1)
        let mut step: HashMap<u32, (u32, u32, i32, i32)> = HashMap::new();
        let mut out = Vec::with_capacity(self.current.len());
        for (e, expert) in family.experts.iter().enumerate() {
            let s = self.current[e];
            let (z, o, d0, d1) = match step.get(&s) {
                Some(&t) => t,
                None => {
                    let (zeros, ones) = engine.split(&self.states[s as usize], x);
                    let (d0, d1) = (engine.ldim(&zeros), engine.ldim(&ones));
                    let t = (self.intern(zeros), self.intern(ones), d0, d1);
                    step.insert(s, t);
                    t
                }
            };
            let in_set = expert.round_set.get(self.cursor[e] as usize) == Some(&self.round);
            let bit = rule(in_set, d0, d1);
            out.push((bit, if bit == 1 { o } else { z }));
        }
        Ok(out)
    }

    /// Outputs on `x` without moving.
    pub fn peek(&mut self, family: &ExpertFamily, x: usize) -> Result<Vec<u8>> {
        Ok(self.transitions(family, x)?.into_iter().map(|(b, _)| b).collect())
    }

    /// Outputs on `x`; every expert then moves to the version space of its
    /// own output.
    pub fn advance(&mut self, family: &ExpertFamily, x: usize) -> Result<Vec<u8>> {
        let moves = self.transitions(family, x)?;
        let mut out = Vec::with_capacity(moves.len());
        for (e, (bit, next)) in moves.into_iter().enumerate() {
            if family.experts[e].round_set.get(self.cursor[e] as usize) == Some(&self.round) {
                self.cursor[e] += 1;
            }
            self.current[e] = next;
            out.push(bit);
        }
        self.round += 1;
        Ok(out)
    }
}

/// A [`WalkState`] bound to its family.
pub struct FamilyWalk<'f> {
    family: &'f ExpertFamily,
    state: WalkState,
}

impl<'f> FamilyWalk<'f> {
    pub fn new(family: &'f ExpertFamily) -> Self {
        FamilyWalk {
            family,
            state: WalkState::new(family),
        }
    }

    pub fn round(&self) -> usize {
        self.state.round
    }

    pub fn distinct_states(&self) -> usize {
        self.state.distinct_states()
    }

    pub fn peek(&mut self, x: usize) -> Result<Vec<u8>> {
        self.state.peek(self.family, x)
    }

    pub fn advance(&mut self, x: usize) -> Result<Vec<u8>> {
        self.state.advance(self.family, x)
    }

    /// Outputs of every expert on a whole sequence, indexed `[expert][round]`.
    pub fn run(family: &'f ExpertFamily, sequence: &[usize]) -> Result<Vec<Vec<u8>>> {
        let mut walk = FamilyWalk::new(family);
        let mut table = vec![Vec::with_capacity(sequence.len()); family.len()];
        for &x in sequence {
            for (row, b) in table.iter_mut().zip(walk.advance(x)?) {
                row.push(b);
            }
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    #[test]
    fn family_sizes() {
        let single = generate::singleton("0110").unwrap();
        for t in [0, 1, 5, 9] {
            assert_eq!(build_cover(&single, t).unwrap().len(), 1);
        }
        let f2 = generate::full(2).unwrap();
        assert_eq!(build_cover(&f2, 4).unwrap().len(), 11);
        let t8 = generate::threshold(8);
        assert_eq!(build_cover(&t8, 5).unwrap().len(), 26);
        assert_eq!(binomial_sum(64, 3), 1 + 64 + 2016 + 41664);
        assert!(matches!(
            ExpertFamily::build(&t8, 64, 1000),
            Err(Error::Resource { needed: 43745, .. })
        ));
        assert!(build_cover(&HypothesisClass::empty(3), 4).unwrap().is_empty());
    }

    #[test]
    fn lexicographic_order() {
        let f2 = generate::full(2).unwrap();
        let fam = build_cover(&f2, 3).unwrap();
        let sets: Vec<&[usize]> = fam.experts().iter().map(|e| e.round_set()).collect();
        assert_eq!(sets, vec![&[][..], &[0], &[0, 1], &[0, 2], &[1], &[1, 2], &[2]]);
    }

    #[test]
    fn tie_rules() {
        // Both sides of point 0 in full(2) have dimension 1.
        let f2 = generate::full(2).unwrap();
        let fam = build_cover(&f2, 2).unwrap();
        let outside = fam.experts().iter().position(|e| e.round_set().is_empty()).unwrap();
        let inside = fam.experts().iter().position(|e| e.round_set() == [0]).unwrap();
        assert_eq!(fam.predict(outside, &[], 0).unwrap(), 1);
        assert_eq!(fam.predict(inside, &[], 0).unwrap(), 0);
    }

    #[test]
    fn full3_empty_set_follows_ones() {
        let f3 = generate::full(3).unwrap();
        let fam = build_cover(&f3, 6).unwrap();
        assert!(fam.expert(0).round_set().is_empty());
        let seq = [2, 0, 1, 0, 2, 1];
        let mut history = Vec::new();
        for &x in &seq {
            let b = fam.predict(0, &history, x).unwrap();
            assert_eq!(b, 1);
            history.push((x, b));
        }
        let walked = FamilyWalk::run(&fam, &seq).unwrap();
        assert_eq!(walked[0], vec![1; 6]);
        let mut walk = fam.walk();
        assert_eq!(walk.peek(2).unwrap(), walk.advance(2).unwrap());
        assert_eq!(walk.round(), 1);
    }

    #[test]
    fn contract_and_horizon() {
        let t8 = generate::threshold(8);
        let fam = build_cover(&t8, 2).unwrap();
        let b = fam.predict(0, &[], 3).unwrap();
        assert!(matches!(fam.predict(0, &[(3, 1 - b)], 4), Err(Error::Contract(_))));
        let c = fam.predict(0, &[(3, b)], 5).unwrap();
        assert!(matches!(
            fam.predict(0, &[(3, b), (5, c)], 1),
            Err(Error::Horizon { round: 2, horizon: 2 })
        ));
        let mut walk = fam.walk();
        walk.advance(0).unwrap();
        walk.advance(1).unwrap();
        assert!(matches!(walk.advance(2), Err(Error::Horizon { .. })));
    }

    #[test]
    fn walk_matches_replayed_prediction() {
        let c = generate::random_capped_ldim(5, 12, 2, 7, generate::DEFAULT_RETRIES).unwrap();
        let fam = build_cover(&c, 5).unwrap();
        let seq = [4, 1, 1, 0, 3];
        let table = FamilyWalk::run(&fam, &seq).unwrap();
        for (e, row) in table.iter().enumerate() {
            let mut history = Vec::new();
            for (i, &x) in seq.iter().enumerate() {
                let b = fam.predict(e, &history, x).unwrap();
                assert_eq!(b, row[i]);
                history.push((x, b));
            }
        }
    }
}
