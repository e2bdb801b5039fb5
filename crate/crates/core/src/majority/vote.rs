use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::bits::{BitSet, HypSet, PointSet};
use crate::class::HypothesisClass;
use crate::epsilon::Epsilon;
use crate::error::{Error, Result};

/// How a defined vote is named.
///
/// `Majority` calls the vote 1 when the zeros are the small side, so the vote
/// is the label most of `B` carries. `Literal` swaps the two names. Goodness
/// does not depend on the choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    Majority,
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    /// `None` when neither side is below an ε fraction.
    pub value: Option<u8>,
    pub ones: usize,
    pub zeros: usize,
}

impl Vote {
    pub fn from_counts(ones: usize, zeros: usize, eps: Epsilon, polarity: Polarity) -> Vote {
        let total = ones + zeros;
        let majority = if eps.below(zeros, total) {
            Some(1)
        } else if eps.below(ones, total) {
            Some(0)
        } else {
            None
        };
        let value = match polarity {
            Polarity::Majority => majority,
            Polarity::Literal => majority.map(|v| 1 - v),
        };
        Vote { value, ones, zeros }
    }

    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

/// `𝐭(h, B)` with the majority reading.
pub fn vote(class: &HypothesisClass, h: usize, b: &PointSet, eps: Epsilon) -> Result<Vote> {
    vote_with(class, h, b, eps, Polarity::Majority)
}

pub fn vote_with(
    class: &HypothesisClass,
    h: usize,
    b: &PointSet,
    eps: Epsilon,
    polarity: Polarity,
) -> Result<Vote> {
    if b.is_empty() {
        return Err(Error::domain("vote over an empty point set"));
    }
    let ones = class.row(h).intersection_count(b);
    Ok(Vote::from_counts(ones, b.count() - ones, eps, polarity))
}

/// Hypotheses whose majority vote on `b` is 1. Only meaningful when `b` is ε-good.
pub fn vote_column(class: &HypothesisClass, b: &PointSet, eps: Epsilon) -> HypSet {
    let total = b.count();
    let mut col = HypSet::new(class.len());
    for h in 0..class.len() {
        let ones = class.row(h).intersection_count(b);
        if eps.below(total - ones, total) {
            col.insert(h);
        }
    }
    col
}

/// Every hypothesis has a defined vote on `b`.
pub fn is_good_subset(b: &PointSet, class: &HypothesisClass, eps: Epsilon) -> Result<bool> {
    Ok(find_violator(b, class, eps)?.is_none())
}

/// Lowest-index hypothesis whose vote on `b` is undefined.
pub fn find_violator(b: &PointSet, class: &HypothesisClass, eps: Epsilon) -> Result<Option<usize>> {
    if b.is_empty() {
        return Err(Error::domain("goodness of an empty point set"));
    }
    let total = b.count();
    Ok((0..class.len()).find(|&h| {
        let ones = class.row(h).intersection_count(b);
        !eps.below(ones, total) && !eps.below(total - ones, total)
    }))
}

/// The counting goodness of a hypothesis set: every point splits `set` with
/// one side below an ε fraction.
pub fn is_good_hypotheses(set: &HypSet, class: &HypothesisClass, eps: Epsilon) -> bool {
    first_splitting_point(set, class, eps).is_none()
}

/// Lowest point splitting `set` into two sides each at least an ε fraction.
pub fn first_splitting_point(set: &HypSet, class: &HypothesisClass, eps: Epsilon) -> Option<usize> {
    let total = set.count();
    (0..class.domain_size()).find(|&x| {
        let ones = set.intersection_count(class.col(x));
        eps.at_least(ones, total) && eps.at_least(total - ones, total)
    })
}

/// Probability distribution with positive rational weights summing to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    weights: BTreeMap<usize, Ratio<i128>>,
}

impl Distribution {
    pub fn new(weights: impl IntoIterator<Item = (usize, Ratio<i128>)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (x, w) in weights {
            if w <= Ratio::from_integer(0) {
                return Err(Error::domain(format!("weight of point {x} is not positive")));
            }
            if map.insert(x, w).is_some() {
                return Err(Error::domain(format!("point {x} weighted twice")));
            }
        }
        if map.is_empty() {
            return Err(Error::domain("distribution with empty support"));
        }
        let total: Ratio<i128> = map.values().copied().sum();
        if total != Ratio::from_integer(1) {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Distribution { weights: map })
    }

    pub fn point_mass(x: usize) -> Self {
        Distribution {
            weights: BTreeMap::from([(x, Ratio::from_integer(1))]),
        }
    }

    pub fn uniform(support: &PointSet) -> Result<Self> {
        let k = support.count() as i128;
        if k == 0 {
            return Err(Error::domain("uniform distribution on an empty set"));
        }
        Ok(Distribution {
            weights: support.iter().map(|x| (x, Ratio::new(1, k))).collect(),
        })
    }

    pub fn weights(&self) -> &BTreeMap<usize, Ratio<i128>> {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> Ratio<i128> {
        self.weights.get(&x).copied().unwrap_or_else(|| Ratio::from_integer(0))
    }

    pub fn support(&self, domain_size: usize) -> PointSet {
        BitSet::from_indices(domain_size, self.weights.keys().copied())
    }

    /// `Pr_{x∼D}[h(x) = 1]`.
    pub fn mass_of_ones(&self, class: &HypothesisClass, h: usize) -> Ratio<i128> {
        self.weights
            .iter()
            .filter(|(&x, _)| class.value(h, x) == 1)
            .map(|(_, w)| *w)
            .sum()
    }

    /// Vote under the closed-interval rule: 0 if the mass of ones is at most
    /// ε, 1 if it is at least 1 − ε.
    pub fn vote(&self, class: &HypothesisClass, h: usize, eps: Epsilon) -> Option<u8> {
        let mass = self.mass_of_ones(class, h);
        let e = eps.as_ratio();
        if mass <= e {
            Some(0)
        } else if mass >= Ratio::from_integer(1) - e {
            Some(1)
        } else {
            None
        }
    }

    /// Inverse-CDF sampling from a uniform `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (&x, w) in &self.weights {
            acc += *w.numer() as f64 / *w.denom() as f64;
            last = x;
            if u < acc {
                return x;
            }
        }
        last
    }
}

#[derive(Serialize, Deserialize)]
struct WeightEntry {
    point: usize,
    weight: String,
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<WeightEntry> = self
            .weights
            .iter()
            .map(|(&point, w)| WeightEntry {
                point,
                weight: w.to_string(),
            })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<WeightEntry>::deserialize(d)?;
        let mut weights = Vec::with_capacity(entries.len());
        for e in entries {
            let w: Ratio<i128> = e.weight.parse().map_err(serde::de::Error::custom)?;
            weights.push((e.point, w));
        }
        Distribution::new(weights).map_err(serde::de::Error::custom)
    }
}

/// Every hypothesis's mass of ones lies in `[0, ε] ∪ [1 − ε, 1]`.
pub fn is_good_dist(d: &Distribution, class: &HypothesisClass, eps: Epsilon) -> bool {
    (0..class.len()).all(|h| d.vote(class, h, eps).is_some())
}
