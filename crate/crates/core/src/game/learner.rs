use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::HypSet;
use crate::class::HypothesisClass;
use crate::error::{Error, Result};
use crate::experts::{ExpertFamily, WalkState};
use crate::majority::{ldim_largeness, LargenessRelation};

/// A committed prediction: the probability of 1 the learner assigned and the
/// bit it drew.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub bit: u8,
}

/// An online learner. Each round the harness may query [`probability`]
/// on any points, then calls [`predict`] once on the round's point and
/// [`update`] with the true label.
///
/// [`probability`]: Learner::probability
/// [`predict`]: Learner::predict
/// [`update`]: Learner::update
pub trait Learner: Send {
    fn name(&self) -> &'static str;
    /// Predictions are 0/1 with certainty.
    fn is_deterministic(&self) -> bool;
    /// Probability of predicting 1 on `x` now. Does not advance the round.
    fn probability(&mut self, x: usize) -> Result<f64>;
    fn predict(&mut self, x: usize) -> Result<Prediction>;
    fn update(&mut self, x: usize, y: u8) -> Result<()>;
    /// The version space ran dry: the sequence is not realizable.
    fn agnostic(&self) -> bool {
        false
    }
}

/// Version-space learner driven by a largeness relation: predict the label
/// whose side of the version space is large in it (0 if neither), and cut
/// the version space down to the true side on mistakes only.
pub struct VersionSpaceLearner {
    class: Arc<HypothesisClass>,
    relation: Arc<dyn LargenessRelation + Send + Sync>,
    version: HypSet,
    pending: Option<(usize, u8)>,
    agnostic: bool,
}

impl VersionSpaceLearner {
    pub fn new(class: Arc<HypothesisClass>, relation: Arc<dyn LargenessRelation + Send + Sync>) -> Self {
        let version = class.all();
        VersionSpaceLearner {
            class,
            relation,
            version,
            pending: None,
            agnostic: false,
        }
    }

    pub fn version_space(&self) -> &HypSet {
        &self.version
    }

    fn choose(&self, x: usize) -> Result<u8> {
        let n = self.class.domain_size();
        if x >= n {
            return Err(Error::domain(format!("point {x} out of range for domain size {n}")));
        }
        if self.version.is_empty() {
            return Ok(0);
        }
        let col = self.class.col(x);
        let ones = self.version.intersection(col);
        let zeros = self.version.difference(col);
        Ok(if self.relation.large(&zeros, &self.version) {
            0
        } else if self.relation.large(&ones, &self.version) {
            1
        } else {
            0
        })
    }
}

/// The standard optimal algorithm: the version-space learner with
/// equal-dimension largeness.
pub fn soa_learner(class: &HypothesisClass) -> VersionSpaceLearner {
    VersionSpaceLearner::new(Arc::new(class.clone()), Arc::new(ldim_largeness(class)))
}

impl Learner for VersionSpaceLearner {
    fn name(&self) -> &'static str {
        "version_space"
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn probability(&mut self, x: usize) -> Result<f64> {
        Ok(self.choose(x)? as f64)
    }

    fn predict(&mut self, x: usize) -> Result<Prediction> {
        let bit = self.choose(x)?;
        self.pending = Some((x, bit));
        Ok(Prediction {
            probability: bit as f64,
            bit,
        })
    }

    fn update(&mut self, x: usize, y: u8) -> Result<()> {
        let (px, bit) = self.pending.take().ok_or_else(|| Error::contract("update without a prediction"))?;
        if px != x {
            return Err(Error::contract(format!("update on point {x} after predicting on {px}")));
        }
        if bit != y && !self.version.is_empty() {
            let col = self.class.col(x);
            self.version = if y == 1 {
                self.version.intersection(col)
            } else {
                self.version.difference(col)
            };
            if self.version.is_empty() {
                self.agnostic = true;
            }
        }
        Ok(())
    }

    fn agnostic(&self) -> bool {
        self.agnostic
    }
}

/// Exponential weights over an expert family with a fixed rate
/// `η = √(8 ln N / T)`; weights are kept as logarithms.
pub struct MwLearner {
    family: Arc<ExpertFamily>,
    walk: WalkState,
    log_weights: Vec<f64>,
    eta: f64,
    horizon: usize,
    rng: ChaCha8Rng,
    pending: Option<(usize, Vec<u8>)>,
}

pub fn mw_learner(family: Arc<ExpertFamily>, horizon: usize, seed: u64) -> Result<MwLearner> {
    if family.horizon() < horizon {
        return Err(Error::contract(format!(
            "family horizon {} is shorter than the game horizon {horizon}",
            family.horizon()
        )));
    }
    if family.is_empty() {
        return Err(Error::domain("expert family is empty"));
    }
    let n = family.len() as f64;
    let eta = if horizon == 0 { 0.0 } else { (8.0 * n.ln() / horizon as f64).sqrt() };
    Ok(MwLearner {
        walk: WalkState::new(&family),
        log_weights: vec![0.0; family.len()],
        family,
        eta,
        horizon,
        rng: ChaCha8Rng::seed_from_u64(seed),
        pending: None,
    })
}

impl MwLearner {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Normalized weights.
    pub fn weights(&self) -> Vec<f64> {
        let top = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.log_weights.iter().map(|w| (w - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    fn outputs(&mut self, x: usize) -> Result<Vec<u8>> {
        if self.walk.round() >= self.horizon {
            return Err(Error::contract(format!(
                "round {} is past the horizon {}",
                self.walk.round(),
                self.horizon
            )));
        }
        self.walk.peek(&self.family, x)
    }

    fn mass_of_ones(&self, outputs: &[u8]) -> f64 {
        let top = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (mut ones, mut total) = (0.0, 0.0);
        for (w, &b) in self.log_weights.iter().zip(outputs) {
            let v = (w - top).exp();
            total += v;
            if b == 1 {
                ones += v;
            }
        }
        (ones / total).clamp(0.0, 1.0)
    }
}

impl Learner for MwLearner {
    fn name(&self) -> &'static str {
        "mw"
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn probability(&mut self, x: usize) -> Result<f64> {
        let out = self.outputs(x)?;
        Ok(self.mass_of_ones(&out))
    }

    fn predict(&mut self, x: usize) -> Result<Prediction> {
        let out = self.outputs(x)?;
        let probability = self.mass_of_ones(&out);
        let bit = (self.rng.gen::<f64>() < probability) as u8;
        self.pending = Some((x, out));
        Ok(Prediction { probability, bit })
    }

    fn update(&mut self, x: usize, y: u8) -> Result<()> {
        let (px, out) = self.pending.take().ok_or_else(|| Error::contract("update without a prediction"))?;
        if px != x {
            return Err(Error::contract(format!("update on point {x} after predicting on {px}")));
        }
        for (w, &b) in self.log_weights.iter_mut().zip(&out) {
            if b != y {
                *w -= self.eta;
            }
        }
        self.walk.advance(&self.family, x)?;
        Ok(())
    }
}

/// Recipe for fresh learners; the harness builds one per trial and the
/// oblivious adversary builds more to replay resampled histories.
#[derive(Clone)]
pub enum LearnerSpec {
    VersionSpace {
        class: Arc<HypothesisClass>,
        relation: Arc<dyn LargenessRelation + Send + Sync>,
    },
    Mw { family: Arc<ExpertFamily> },
}

impl LearnerSpec {
    pub fn soa(class: &HypothesisClass) -> Self {
        LearnerSpec::VersionSpace {
            class: Arc::new(class.clone()),
            relation: Arc::new(ldim_largeness(class)),
        }
    }

    pub fn mw(family: ExpertFamily) -> Self {
        LearnerSpec::Mw {
            family: Arc::new(family),
        }
    }

    pub fn name(&self) -> String {
        match self {
            LearnerSpec::VersionSpace { relation, .. } if relation.name() == "ldim" => "soa".into(),
            LearnerSpec::VersionSpace { relation, .. } => format!("version_space[{}]", relation.name()),
            LearnerSpec::Mw { .. } => "mw".into(),
        }
    }

    pub fn class(&self) -> &HypothesisClass {
        match self {
            LearnerSpec::VersionSpace { class, .. } => class,
            LearnerSpec::Mw { family } => family.class(),
        }
    }

    pub fn family(&self) -> Option<&Arc<ExpertFamily>> {
        match self {
            LearnerSpec::Mw { family } => Some(family),
            LearnerSpec::VersionSpace { .. } => None,
        }
    }

    pub fn build(&self, horizon: usize, seed: u64) -> Result<Box<dyn Learner>> {
        Ok(match self {
            LearnerSpec::VersionSpace { class, relation } => {
                Box::new(VersionSpaceLearner::new(Arc::clone(class), Arc::clone(relation)))
            }
            LearnerSpec::Mw { family } => Box::new(mw_learner(Arc::clone(family), horizon, seed)?),
        })
    }
}
