use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::learner::{Learner, LearnerSpec};
use crate::class::HypothesisClass;
use crate::dims::{NodeLabel, VirtualTree};
use crate::epsilon::Epsilon;
use crate::error::{Error, Result};
use crate::majority::{is_good_dist, Distribution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryMode {
    /// Label against the learner's probability given the realized history.
    Adaptive,
    /// Label against the marginal over resampled histories along the branch.
    Oblivious,
}

/// How the oblivious mode estimates `Pr[learner predicts 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Average the learner's prediction probability over history samples.
    Expected,
    /// Average a sampled prediction per history, drawing fresh learner
    /// randomness each time.
    Resampled,
}

/// What the adversary decided for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub x: usize,
    pub y: u8,
    /// `Pr[learner predicts 1]` over the adversary's own distribution on
    /// `x`, given the realized history.
    pub conditional_one: Option<f64>,
    pub estimate_expected: Option<f64>,
    pub estimate_resampled: Option<f64>,
    pub estimate_exact: bool,
}

/// One trial's adversary. It picks `(x_t, y_t)` before seeing the learner's
/// draw; the learner is passed for probability queries only.
pub trait Adversary: Send {
    fn next(&mut self, learner: &mut dyn Learner) -> Result<Move>;
}

/// Replays a fixed labeled sequence.
pub struct Replay {
    sequence: Arc<Vec<(usize, u8)>>,
    round: usize,
}

impl Replay {
    pub fn new(sequence: Arc<Vec<(usize, u8)>>) -> Self {
        Replay { sequence, round: 0 }
    }
}

impl Adversary for Replay {
    fn next(&mut self, _: &mut dyn Learner) -> Result<Move> {
        let &(x, y) = self.sequence.get(self.round).ok_or(Error::Horizon {
            round: self.round,
            horizon: self.sequence.len(),
        })?;
        self.round += 1;
        Ok(Move {
            x,
            y,
            conditional_one: None,
            estimate_expected: None,
            estimate_resampled: None,
            estimate_exact: false,
        })
    }
}

/// Node distributions of a good tree in sampling-friendly form.
#[derive(Clone, Debug)]
pub struct GoodTree {
    tree: VirtualTree,
    eps: Epsilon,
    dists: Vec<Distribution>,
    supports: Vec<Vec<(usize, f64)>>,
}

impl GoodTree {
    /// Every label must be an ε-good distribution (point and subset labels
    /// are read as point masses and uniform distributions).
    pub fn new(class: &HypothesisClass, tree: VirtualTree, eps: Epsilon) -> Result<Self> {
        let n = class.domain_size();
        let mut dists = Vec::with_capacity(tree.labels().len());
        for (i, label) in tree.labels().iter().enumerate() {
            let d = match label {
                NodeLabel::Point { point } => Distribution::point_mass(*point),
                NodeLabel::Subset { points } => {
                    Distribution::uniform(&crate::bits::BitSet::from_indices(n, points.iter().copied()))?
                }
                NodeLabel::Distribution { weights } => weights.clone(),
            };
            if d.weights().keys().any(|&x| x >= n) {
                return Err(Error::domain(format!("node {i} puts mass outside the domain")));
            }
            if !is_good_dist(&d, class, eps) {
                return Err(Error::domain(format!(
                    "node {} is not an ε-good distribution",
                    crate::dims::address(i)
                )));
            }
            dists.push(d);
        }
        let supports = dists
            .iter()
            .map(|d| {
                d.weights()
                    .iter()
                    .map(|(&x, w)| (x, *w.numer() as f64 / *w.denom() as f64))
                    .collect()
            })
            .collect();
        Ok(GoodTree {
            tree,
            eps,
            dists,
            supports,
        })
    }

    pub fn tree(&self) -> &VirtualTree {
        &self.tree
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn eps(&self) -> Epsilon {
        self.eps
    }

    fn sample(&self, node: usize, rng: &mut ChaCha8Rng) -> usize {
        self.dists[node].sample(rng.gen::<f64>())
    }
}

#[derive(Clone, Debug)]
pub struct GoodTreeConfig {
    pub tree: Arc<GoodTree>,
    pub mode: AdversaryMode,
    pub estimator: Estimator,
    /// Monte Carlo samples per round in oblivious mode.
    pub budget: usize,
    /// Largest number of histories enumerated exactly for deterministic
    /// learners in oblivious mode.
    pub exact_cap: u128,
}

/// Walks a good tree: at each node chooses `y_t` so the learner errs with
/// probability at least 1/2, samples `x_t` from the node's distribution and
/// steps into subtree `y_t`.
pub struct GoodTreeAdversary {
    config: GoodTreeConfig,
    learner: LearnerSpec,
    horizon: usize,
    rng: ChaCha8Rng,
    node: usize,
    level: usize,
    labels: Vec<u8>,
    path: Vec<usize>,
}

impl GoodTreeAdversary {
    pub fn new(config: GoodTreeConfig, learner: LearnerSpec, horizon: usize, seed: u64) -> Self {
        GoodTreeAdversary {
            config,
            learner,
            horizon,
            rng: ChaCha8Rng::seed_from_u64(seed),
            node: 0,
            level: 0,
            labels: Vec::new(),
            path: Vec::new(),
        }
    }

    fn conditional_one(&self, learner: &mut dyn Learner) -> Result<f64> {
        let mut q = 0.0;
        for &(x, w) in &self.config.tree.supports[self.node] {
            q += w * learner.probability(x)?;
        }
        Ok(q.clamp(0.0, 1.0))
    }

    /// Exact marginal over all histories along the path, for deterministic
    /// learners; `None` past the cap.
    fn exact_marginal(&self) -> Result<Option<f64>> {
        let tree = &self.config.tree;
        let mut nodes = self.path.clone();
        nodes.push(self.node);
        let mut count: u128 = 1;
        for &v in &nodes {
            count = count.saturating_mul(tree.supports[v].len() as u128);
        }
        if count > self.config.exact_cap {
            return Ok(None);
        }
        let mut total = 0.0;
        let mut digits = vec![0usize; nodes.len()];
        'outer: loop {
            let mut learner = self.learner.build(self.horizon, 0)?;
            let mut weight = 1.0;
            for (j, &v) in nodes.iter().enumerate() {
                let (x, w) = tree.supports[v][digits[j]];
                weight *= w;
                if j + 1 == nodes.len() {
                    total += weight * learner.probability(x)?;
                } else {
                    learner.predict(x)?;
                    learner.update(x, self.labels[j])?;
                }
            }
            for j in (0..nodes.len()).rev() {
                digits[j] += 1;
                if digits[j] < tree.supports[nodes[j]].len() {
                    continue 'outer;
                }
                digits[j] = 0;
            }
            break;
        }
        Ok(Some(total))
    }

    /// Monte Carlo marginal: `(expected, resampled)` estimates.
    fn sampled_marginal(&mut self) -> Result<(f64, f64)> {
        let budget = self.config.budget.max(1);
        let (mut sum_p, mut sum_b) = (0.0, 0.0);
        for _ in 0..budget {
            let s = self.rng.next_u64();
            let mut local = ChaCha8Rng::seed_from_u64(s);
            let mut learner = self.learner.build(self.horizon, local.next_u64())?;
            for (j, &v) in self.path.iter().enumerate() {
                let x = self.config.tree.sample(v, &mut local);
                learner.predict(x)?;
                learner.update(x, self.labels[j])?;
            }
            let x = self.config.tree.sample(self.node, &mut local);
            sum_p += learner.probability(x)?;
            sum_b += learner.predict(x)?.bit as f64;
        }
        Ok((sum_p / budget as f64, sum_b / budget as f64))
    }
}

impl Adversary for GoodTreeAdversary {
    fn next(&mut self, learner: &mut dyn Learner) -> Result<Move> {
        let depth = self.config.tree.depth();
        if self.level >= depth {
            return Err(Error::Horizon {
                round: self.level,
                horizon: depth,
            });
        }
        let conditional = self.conditional_one(learner)?;
        let (y, expected, resampled, exact) = match self.config.mode {
            AdversaryMode::Adaptive => ((conditional <= 0.5) as u8, None, None, false),
            AdversaryMode::Oblivious => {
                let exact = if learner.is_deterministic() { self.exact_marginal()? } else { None };
                let (e, r, is_exact) = match exact {
                    Some(p) => (p, p, true),
                    None => {
                        let (e, r) = self.sampled_marginal()?;
                        (e, r, false)
                    }
                };
                let chosen = match self.config.estimator {
                    Estimator::Expected => e,
                    Estimator::Resampled => r,
                };
                ((chosen <= 0.5) as u8, Some(e), Some(r), is_exact)
            }
        };
        let x = self.config.tree.sample(self.node, &mut self.rng);
        self.path.push(self.node);
        self.labels.push(y);
        self.node = 2 * self.node + 1 + y as usize;
        self.level += 1;
        Ok(Move {
            x,
            y,
            conditional_one: Some(conditional),
            estimate_expected: expected,
            estimate_resampled: resampled,
            estimate_exact: exact,
        })
    }
}

/// Shared labeled sequences for replay.
pub type Sequences = Arc<Vec<Arc<Vec<(usize, u8)>>>>;

/// Recipe for per-trial adversaries.
#[derive(Clone, Debug)]
pub enum AdversarySpec {
    GoodTree(GoodTreeConfig),
    /// Trial `i` replays sequence `i mod len`.
    Replay(Sequences),
}

impl AdversarySpec {
    pub fn replay(sequences: Vec<Vec<(usize, u8)>>) -> Self {
        AdversarySpec::Replay(Arc::new(sequences.into_iter().map(Arc::new).collect()))
    }

    pub fn name(&self) -> String {
        match self {
            AdversarySpec::GoodTree(c) => format!(
                "goodtree[{}]",
                match c.mode {
                    AdversaryMode::Adaptive => "adaptive",
                    AdversaryMode::Oblivious => "oblivious",
                }
            ),
            AdversarySpec::Replay(_) => "replay".into(),
        }
    }

    pub(crate) fn build(
        &self,
        learner: &LearnerSpec,
        horizon: usize,
        trial: usize,
        seed: u64,
    ) -> Result<Box<dyn Adversary>> {
        Ok(match self {
            AdversarySpec::GoodTree(c) => {
                if horizon > c.tree.depth() {
                    return Err(Error::Horizon {
                        round: horizon,
                        horizon: c.tree.depth(),
                    });
                }
                Box::new(GoodTreeAdversary::new(c.clone(), learner.clone(), horizon, seed))
            }
            AdversarySpec::Replay(seqs) => {
                if seqs.is_empty() {
                    return Err(Error::domain("replay adversary has no sequences"));
                }
                Box::new(Replay::new(Arc::clone(&seqs[trial % seqs.len()])))
            }
        })
    }
}
