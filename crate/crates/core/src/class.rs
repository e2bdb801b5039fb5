//! Finite hypothesis classes and the constructions on them.
//!
//! A class is a bit matrix with one row per hypothesis and one column per
//! domain point. Both orientations are stored so row filters and column reads
//! are each a single word-parallel pass. Classes are immutable; every
//! construction returns a fresh class together with index maps back to its
//! source.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::bits::{BitSet, HypSet};
use crate::error::{Error, Result};
use crate::par;

/// Default cap on the number of tuples `combine`/`dual_combine` may enumerate.
pub const DEFAULT_TUPLE_CAP: u128 = 1_000_000;

#[derive(Clone, Debug)]
pub struct HypothesisClass {
    domain_size: usize,
    rows: Vec<BitSet>,
    cols: Vec<BitSet>,
    point_names: Option<Vec<String>>,
    hypothesis_names: Option<Vec<String>>,
}

impl PartialEq for HypothesisClass {
    /// Equal matrices in equal order, with equal effective names
    /// (an unnamed class equals one carrying the default names).
    fn eq(&self, other: &Self) -> bool {
        self.domain_size == other.domain_size
            && self.rows == other.rows
            && (0..self.domain_size).all(|i| self.point_name(i) == other.point_name(i))
            && (0..self.len()).all(|j| self.hypothesis_name(j) == other.hypothesis_name(j))
    }
}

impl Eq for HypothesisClass {}

impl HypothesisClass {
    /// Builds a class from rows, rejecting length mismatches and duplicates.
    pub fn new(domain_size: usize, rows: Vec<BitSet>) -> Result<Self> {
        let mut seen: HashMap<&BitSet, usize> = HashMap::with_capacity(rows.len());
        for (j, row) in rows.iter().enumerate() {
            if row.len() != domain_size {
                return Err(Error::LengthMismatch {
                    row: j,
                    expected: domain_size,
                    found: row.len(),
                });
            }
            if let Some(&first) = seen.get(row) {
                return Err(Error::DuplicateRows { first, second: j });
            }
            seen.insert(row, j);
        }
        Ok(Self::from_valid_rows(domain_size, rows))
    }

    fn from_valid_rows(domain_size: usize, rows: Vec<BitSet>) -> Self {
        let m = rows.len();
        let mut cols = vec![BitSet::new(m); domain_size];
        for (j, row) in rows.iter().enumerate() {
            for x in row.iter() {
                cols[x].insert(j);
            }
        }
        HypothesisClass {
            domain_size,
            rows,
            cols,
            point_names: None,
            hypothesis_names: None,
        }
    }

    /// Builds a class from rows, merging duplicates; returns the class and,
    /// for each kept row, the index of its first occurrence in the input.
    pub fn from_rows_dedup(domain_size: usize, rows: Vec<BitSet>) -> (Self, Vec<usize>) {
        let mut seen: HashMap<BitSet, ()> = HashMap::with_capacity(rows.len());
        let mut kept = Vec::new();
        let mut source = Vec::new();
        for (j, row) in rows.into_iter().enumerate() {
            debug_assert_eq!(row.len(), domain_size);
            if seen.insert(row.clone(), ()).is_none() {
                kept.push(row);
                source.push(j);
            }
        }
        (Self::from_valid_rows(domain_size, kept), source)
    }

    /// Convenience constructor from 0/1 strings (all of the same length).
    pub fn from_bit_strs<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let parsed = rows
            .iter()
            .enumerate()
            .map(|(j, r)| {
                BitSet::from_bit_str(r.as_ref()).ok_or_else(|| {
                    Error::domain(format!("row {j} `{}` is not a 0/1 string", r.as_ref()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, parsed)
    }

    pub fn empty(domain_size: usize) -> Self {
        Self::from_valid_rows(domain_size, Vec::new())
    }

    pub fn with_names(
        mut self,
        point_names: Option<Vec<String>>,
        hypothesis_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if let Some(p) = &point_names {
            if p.len() != self.domain_size {
                return Err(Error::domain(format!(
                    "{} point names for a domain of size {}",
                    p.len(),
                    self.domain_size
                )));
            }
        }
        if let Some(h) = &hypothesis_names {
            if h.len() != self.len() {
                return Err(Error::domain(format!(
                    "{} hypothesis names for {} hypotheses",
                    h.len(),
                    self.len()
                )));
            }
        }
        self.point_names = point_names;
        self.hypothesis_names = hypothesis_names;
        Ok(self)
    }

    #[inline]
    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    /// Number of hypotheses.
    #[inline]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    #[inline]
    pub fn row(&self, h: usize) -> &BitSet {
        &self.rows[h]
    }

    pub fn rows(&self) -> &[BitSet] {
        &self.rows
    }

    /// The hypotheses labelling `x` with 1.
    #[inline]
    pub fn col(&self, x: usize) -> &HypSet {
        &self.cols[x]
    }

    pub fn cols(&self) -> &[HypSet] {
        &self.cols
    }

    /// `h(x)`.
    #[inline]
    pub fn value(&self, h: usize, x: usize) -> u8 {
        self.rows[h].bit(x)
    }

    /// Every hypothesis index.
    pub fn all(&self) -> HypSet {
        BitSet::full(self.len())
    }

    pub fn point_name(&self, x: usize) -> String {
        self.point_names
            .as_ref()
            .map(|v| v[x].clone())
            .unwrap_or_else(|| format!("x{x}"))
    }

    pub fn hypothesis_name(&self, h: usize) -> String {
        self.hypothesis_names
            .as_ref()
            .map(|v| v[h].clone())
            .unwrap_or_else(|| format!("h{h}"))
    }

    pub fn has_custom_names(&self) -> bool {
        (0..self.domain_size).any(|i| self.point_name(i) != format!("x{i}"))
            || (0..self.len()).any(|j| self.hypothesis_name(j) != format!("h{j}"))
    }

    pub fn hypothesis_set(&self, indices: &[usize]) -> Result<HypSet> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.len()) {
            return Err(Error::domain(format!(
                "hypothesis index {bad} out of range for {} hypotheses",
                self.len()
            )));
        }
        Ok(BitSet::from_indices(self.len(), indices.iter().copied()))
    }

    pub fn point_set(&self, indices: &[usize]) -> Result<BitSet> {
        if let Some(&bad) = indices.iter().find(|&&x| x >= self.domain_size) {
            return Err(Error::domain(format!(
                "domain index {bad} out of range for domain size {}",
                self.domain_size
            )));
        }
        Ok(BitSet::from_indices(self.domain_size, indices.iter().copied()))
    }

    /// Hypotheses consistent with `g`, as an index set.
    pub fn consistent(&self, g: &PartialLabeling) -> Result<HypSet> {
        let mut set = self.all();
        for (&x, &bit) in g.assignments() {
            if x >= self.domain_size {
                return Err(Error::domain(format!(
                    "labeling index {x} out of range for domain size {}",
                    self.domain_size
                )));
            }
            set = if bit == 1 {
                set.intersection(&self.cols[x])
            } else {
                set.difference(&self.cols[x])
            };
        }
        Ok(set)
    }

    /// `H_g`: hypotheses extending `g`, in original order.
    pub fn restrict(&self, g: &PartialLabeling) -> Result<Restriction> {
        let set = self.consistent(g)?;
        Ok(self.subclass(&set))
    }

    /// The class formed by the hypotheses in `set`, keeping names.
    pub fn subclass(&self, set: &HypSet) -> Restriction {
        let kept = set.to_indices();
        let rows = kept.iter().map(|&j| self.rows[j].clone()).collect();
        let mut class = Self::from_valid_rows(self.domain_size, rows);
        class.point_names = self.point_names.clone();
        class.hypothesis_names = self
            .hypothesis_names
            .as_ref()
            .map(|names| kept.iter().map(|&j| names[j].clone()).collect());
        Restriction { class, kept }
    }

    /// Transposes the incidence matrix: points become hypotheses and vice versa.
    pub fn dualize(&self) -> Dual {
        let (class, hypothesis_source) =
            Self::from_rows_dedup(self.len(), self.cols.clone());
        let mut index_of: HashMap<&BitSet, usize> = HashMap::new();
        for (j, row) in class.rows.iter().enumerate() {
            index_of.insert(row, j);
        }
        let point_to_hypothesis = self.cols.iter().map(|c| index_of[c]).collect();
        Dual {
            class,
            point_to_hypothesis,
            hypothesis_source,
        }
    }

    /// `H^(B)`: every `B(h_1, …, h_k)` over k-tuples of hypotheses, deduplicated.
    pub fn combine(&self, b: &BooleanCombiner, cap: u128) -> Result<Combination> {
        if self.is_empty() {
            return Err(Error::domain("combine needs at least one hypothesis"));
        }
        let count = tuple_count(self.len(), b.arity(), cap, "combine tuples")?;
        let k = b.arity();
        let m = self.len();
        let n = self.domain_size;
        let rows = par::map_range(0..count, |t| {
            let tuple = decode_tuple(t, m, k);
            let mut row = BitSet::new(n);
            let mut input = vec![0u8; k];
            for x in 0..n {
                for (slot, &h) in input.iter_mut().zip(&tuple) {
                    *slot = self.value(h, x);
                }
                if b.eval(&input) == 1 {
                    row.insert(x);
                }
            }
            row
        });
        let (class, first) = Self::from_rows_dedup(n, rows);
        let tuples = first.into_iter().map(|t| decode_tuple(t, m, k)).collect();
        Ok(Combination { class, tuples })
    }

    /// `(X^(B), H)`: a new point for every k-tuple of points, evaluated through `B`.
    /// Duplicate columns are merged first, then duplicate hypotheses.
    pub fn dual_combine(&self, b: &BooleanCombiner, cap: u128) -> Result<DualCombination> {
        if self.domain_size == 0 {
            return Err(Error::domain("dual_combine needs at least one domain point"));
        }
        let count = tuple_count(self.domain_size, b.arity(), cap, "dual_combine tuples")?;
        let k = b.arity();
        let n = self.domain_size;
        let m = self.len();
        let columns = par::map_range(0..count, |t| {
            let tuple = decode_tuple(t, n, k);
            let mut col = BitSet::new(m);
            let mut input = vec![0u8; k];
            for h in 0..m {
                for (slot, &x) in input.iter_mut().zip(&tuple) {
                    *slot = self.value(h, x);
                }
                if b.eval(&input) == 1 {
                    col.insert(h);
                }
            }
            col
        });
        let mut seen: HashMap<BitSet, ()> = HashMap::new();
        let mut kept_cols = Vec::new();
        let mut point_tuples = Vec::new();
        for (t, col) in columns.into_iter().enumerate() {
            if seen.insert(col.clone(), ()).is_none() {
                kept_cols.push(col);
                point_tuples.push(decode_tuple(t, n, k));
            }
        }
        let new_n = kept_cols.len();
        let mut rows = vec![BitSet::new(new_n); m];
        for (x, col) in kept_cols.iter().enumerate() {
            for h in col.iter() {
                rows[h].insert(x);
            }
        }
        let (class, hypothesis_source) = Self::from_rows_dedup(new_n, rows);
        Ok(DualCombination {
            class,
            point_tuples,
            hypothesis_source,
        })
    }
}

fn tuple_count(base: usize, k: usize, cap: u128, name: &'static str) -> Result<usize> {
    let needed = (base as u128)
        .checked_pow(k as u32)
        .unwrap_or(u128::MAX);
    if needed > cap {
        return Err(Error::Resource {
            cap: name,
            needed,
            limit: cap,
        });
    }
    Ok(needed as usize)
}

/// Tuple number `t` in lexicographic order over `base^k`, first coordinate most significant.
fn decode_tuple(mut t: usize, base: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = t % base;
        t /= base;
    }
    out
}

/// Result of [`HypothesisClass::restrict`]; `kept[j]` is the source index of hypothesis `j`.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub class: HypothesisClass,
    pub kept: Vec<usize>,
}

/// Result of [`HypothesisClass::dualize`].
#[derive(Clone, Debug)]
pub struct Dual {
    pub class: HypothesisClass,
    /// Original point `x` ↦ index of its hypothesis in the dual class.
    pub point_to_hypothesis: Vec<usize>,
    /// Dual hypothesis `j` ↦ first original point producing it.
    pub hypothesis_source: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Combination {
    pub class: HypothesisClass,
    /// First source tuple producing each new hypothesis.
    pub tuples: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct DualCombination {
    pub class: HypothesisClass,
    /// Source point tuple for each new domain point.
    pub point_tuples: Vec<Vec<usize>>,
    /// New hypothesis `j` ↦ first original hypothesis producing it.
    pub hypothesis_source: Vec<usize>,
}

/// A partial characteristic function `g`: domain index ↦ label bit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialLabeling {
    assignments: BTreeMap<usize, u8>,
}

impl PartialLabeling {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u8)>) -> Result<Self> {
        let mut g = Self::new();
        for (x, b) in pairs {
            g.assign(x, b)?;
        }
        Ok(g)
    }

    /// Adds `x ↦ bit`; conflicting reassignment is an error.
    pub fn assign(&mut self, x: usize, bit: u8) -> Result<()> {
        if bit > 1 {
            return Err(Error::domain(format!("label {bit} is not a bit")));
        }
        match self.assignments.insert(x, bit) {
            Some(old) if old != bit => Err(Error::contract(format!(
                "point {x} already labelled {old}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn assignments(&self) -> &BTreeMap<usize, u8> {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Union of two labelings that agree on their common points.
    pub fn union(&self, other: &PartialLabeling) -> Result<PartialLabeling> {
        let mut out = self.clone();
        for (&x, &b) in &other.assignments {
            out.assign(x, b)?;
        }
        Ok(out)
    }
}

/// A Boolean function `B : {0,1}^k → {0,1}` given by its truth table.
///
/// Entry `i` of the table is the value on the tuple whose binary expansion
/// (first argument most significant) is `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanCombiner {
    arity: usize,
    table: BitSet,
}

impl BooleanCombiner {
    pub fn from_table(arity: usize, table: &str) -> Result<Self> {
        if arity == 0 || arity > 20 {
            return Err(Error::domain(format!("combiner arity {arity} not in 1..=20")));
        }
        if table.len() != 1 << arity {
            return Err(Error::domain(format!(
                "truth table of length {} for arity {arity} (need {})",
                table.len(),
                1usize << arity
            )));
        }
        let table = BitSet::from_bit_str(table)
            .ok_or_else(|| Error::domain("truth table must be a 0/1 string"))?;
        Ok(BooleanCombiner { arity, table })
    }

    fn from_fn(arity: usize, f: impl Fn(&[u8]) -> bool) -> Self {
        let mut table = BitSet::new(1 << arity);
        let mut input = vec![0u8; arity];
        for i in 0..(1usize << arity) {
            for (pos, slot) in input.iter_mut().enumerate() {
                *slot = ((i >> (arity - 1 - pos)) & 1) as u8;
            }
            if f(&input) {
                table.insert(i);
            }
        }
        BooleanCombiner { arity, table }
    }

    pub fn identity() -> Self {
        Self::projection(1, 0)
    }

    pub fn not() -> Self {
        Self::from_fn(1, |b| b[0] == 0)
    }

    pub fn projection(arity: usize, coordinate: usize) -> Self {
        assert!(coordinate < arity);
        Self::from_fn(arity, |b| b[coordinate] == 1)
    }

    pub fn or(arity: usize) -> Self {
        Self::from_fn(arity, |b| b.contains(&1))
    }

    pub fn and(arity: usize) -> Self {
        Self::from_fn(arity, |b| b.iter().all(|&v| v == 1))
    }

    /// 0 when at least half the inputs are 0, else 1.
    pub fn majority(arity: usize) -> Self {
        Self::from_fn(arity, |b| {
            let zeros = b.iter().filter(|&&v| v == 0).count();
            2 * zeros < arity
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn truth_table(&self) -> String {
        self.table.to_bit_string()
    }

    #[inline]
    pub fn eval(&self, input: &[u8]) -> u8 {
        debug_assert_eq!(input.len(), self.arity);
        let idx = input.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.table.bit(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    fn rows_of(c: &HypothesisClass) -> Vec<String> {
        c.rows().iter().map(|r| r.to_bit_string()).collect()
    }

    #[test]
    fn rejects_duplicates_and_mismatches() {
        assert!(matches!(
            HypothesisClass::from_bit_strs(&["01", "01"]),
            Err(Error::DuplicateRows { first: 0, second: 1 })
        ));
        let bad = HypothesisClass::new(3, vec![BitSet::new(4)]);
        assert!(matches!(bad, Err(Error::LengthMismatch { row: 0, .. })));
        assert!(HypothesisClass::new(0, vec![]).unwrap().is_empty());
    }

    #[test]
    fn restrict_full3() {
        let full = generate::full(3).unwrap();
        let r = full.restrict(&PartialLabeling::from_pairs([(0, 1)]).unwrap()).unwrap();
        assert_eq!(r.class.len(), 4);
        assert!(r.class.rows().iter().all(|row| row.contains(0)));
        let same = full.restrict(&PartialLabeling::new()).unwrap();
        assert_eq!(same.class, full);
    }

    #[test]
    fn restrict_threshold8() {
        let t8 = generate::threshold(8);
        let g = PartialLabeling::from_pairs([(0, 1), (7, 0)]).unwrap();
        let r = t8.restrict(&g).unwrap();
        assert_eq!(r.kept, (1..=7).collect::<Vec<_>>());
        assert!(t8
            .restrict(&PartialLabeling::from_pairs([(8, 1)]).unwrap())
            .is_err());
    }

    #[test]
    fn dual_of_single_row() {
        let single = HypothesisClass::from_bit_strs(&["0110"]).unwrap();
        let d = single.dualize();
        assert_eq!(d.class.domain_size(), 1);
        assert_eq!(rows_of(&d.class), vec!["0", "1"]);
        assert_eq!(d.point_to_hypothesis, vec![0, 1, 1, 0]);
    }

    #[test]
    fn dual_of_threshold8() {
        let t8 = generate::threshold(8);
        let d = t8.dualize();
        assert_eq!(d.class.domain_size(), 9);
        assert_eq!(d.class.len(), 8);
        // point x_i sees h_j = 1 iff i < j, so its dual row is 1 exactly at j > i.
        for (i, row) in d.class.rows().iter().enumerate() {
            let expect: String = (0..9).map(|j| if i < j { '1' } else { '0' }).collect();
            assert_eq!(row.to_bit_string(), expect);
        }
    }

    #[test]
    fn combine_identity_and_not() {
        let c = HypothesisClass::from_bit_strs(&["000", "111"]).unwrap();
        let id = c.combine(&BooleanCombiner::identity(), DEFAULT_TUPLE_CAP).unwrap();
        assert_eq!(id.class, c);
        let not = c.combine(&BooleanCombiner::from_table(1, "10").unwrap(), DEFAULT_TUPLE_CAP)
            .unwrap();
        assert_eq!(rows_of(&not.class), vec!["111", "000"]);
    }

    #[test]
    fn combine_threshold_majority_count() {
        // Independent count: the 3-wise majority of thresholds h_a, h_b, h_c is
        // the threshold at the median, so the class is again threshold(8).
        let t8 = generate::threshold(8);
        let maj = t8.combine(&BooleanCombiner::majority(3), DEFAULT_TUPLE_CAP).unwrap();
        let mut brute: Vec<String> = Vec::new();
        for a in 0..9 {
            for b in 0..9 {
                for c in 0..9 {
                    let row: String = (0..8)
                        .map(|x| {
                            let ones = [a, b, c].iter().filter(|&&j| x < j).count();
                            if ones >= 2 { '1' } else { '0' }
                        })
                        .collect();
                    if !brute.contains(&row) {
                        brute.push(row);
                    }
                }
            }
        }
        assert_eq!(maj.class.len(), brute.len());
        assert_eq!(maj.class.len(), 9);
        assert!(t8
            .combine(&BooleanCombiner::majority(3), 100)
            .is_err());
    }

    #[test]
    fn dual_combine_or_adds_point() {
        let c = HypothesisClass::from_bit_strs(&["01", "10"]).unwrap();
        let dc = c.dual_combine(&BooleanCombiner::or(2), DEFAULT_TUPLE_CAP).unwrap();
        // columns: (0,0)->{h1}, (0,1)->{h0,h1}, (1,0) dup, (1,1)->{h0}
        assert_eq!(dc.class.domain_size(), 3);
        assert!(dc.class.cols().iter().any(|col| col.count() == 2));
        assert_eq!(dc.point_tuples, vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn dual_combine_commutes_with_dualize() {
        let c = HypothesisClass::from_bit_strs(&["0110", "1010", "0001"]).unwrap();
        for b in [BooleanCombiner::or(2), BooleanCombiner::majority(3), BooleanCombiner::not()] {
            let left = c.dual_combine(&b, DEFAULT_TUPLE_CAP).unwrap().class.dualize().class;
            let right = c.dualize().class.combine(&b, DEFAULT_TUPLE_CAP).unwrap().class;
            let mut l = rows_of(&left);
            let mut r = rows_of(&right);
            l.sort();
            r.sort();
            assert_eq!(l, r);
        }
    }

    #[test]
    fn combiner_tables() {
        assert_eq!(BooleanCombiner::or(2).truth_table(), "0111");
        assert_eq!(BooleanCombiner::majority(3).truth_table(), "00010111");
        assert_eq!(BooleanCombiner::not().truth_table(), "10");
        assert!(BooleanCombiner::from_table(2, "011").is_err());
    }
}
