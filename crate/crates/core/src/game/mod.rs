//! The online game: learners, adversaries, transcripts and regret.

mod adversary;
mod learner;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experts::{ExpertFamily, FamilyWalk};
use crate::par;

pub use adversary::{
    Adversary, AdversaryMode, AdversarySpec, Estimator, GoodTree, GoodTreeAdversary, GoodTreeConfig,
    Move, Replay, Sequences,
};
pub use learner::{mw_learner, soa_learner, Learner, LearnerSpec, MwLearner, Prediction, VersionSpaceLearner};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Round {
    pub x: usize,
    /// Learner's probability of predicting 1.
    pub probability: f64,
    pub prediction: u8,
    pub label: u8,
    /// Error probability given the realized history, when the adversary
    /// knows its distribution over `x`.
    pub conditional_error: Option<f64>,
    pub estimate_expected: Option<f64>,
    pub estimate_resampled: Option<f64>,
    pub estimate_exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameTranscript {
    pub trial: usize,
    pub rounds: Vec<Round>,
    pub mistakes: u64,
    /// `Σ |p_t − y_t|`.
    pub expected_mistakes: f64,
    pub best_hypothesis: Option<usize>,
    pub best_hypothesis_mistakes: Option<u64>,
    pub best_expert: Option<usize>,
    pub best_expert_mistakes: Option<u64>,
    /// For tree adversaries: a hypothesis whose votes follow the branch taken.
    pub realizing_hypothesis: Option<usize>,
    pub realizing_mistakes: Option<u64>,
    /// Mistakes minus the smallest comparator count.
    pub regret: f64,
    pub expected_regret: f64,
    /// Expected mistakes minus the best expert's mistakes.
    pub expected_regret_vs_expert: Option<f64>,
    pub agnostic: bool,
}

impl GameTranscript {
    pub fn min_conditional_error(&self) -> Option<f64> {
        self.rounds
            .iter()
            .filter_map(|r| r.conditional_error)
            .reduce(f64::min)
    }

    /// `trial,mistakes,best_h,best_expert,regret`.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
        format!(
            "{},{},{},{},{}",
            self.trial,
            self.mistakes,
            opt(self.best_hypothesis_mistakes),
            opt(self.best_expert_mistakes),
            self.regret
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct GameOptions {
    /// Family used for the best-expert comparator; defaults to the MW
    /// learner's own family.
    pub comparator: Option<std::sync::Arc<ExpertFamily>>,
    pub keep_transcripts: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation (0 for one trial).
    pub sd: f64,
    /// `sd / √trials`.
    pub stderr: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Stats {
            mean,
            sd,
            stderr: sd / n.sqrt(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub mistakes: u64,
    pub expected_mistakes: f64,
    pub best_hypothesis_mistakes: Option<u64>,
    pub best_expert_mistakes: Option<u64>,
    pub realizing_mistakes: Option<u64>,
    pub regret: f64,
    pub expected_regret: f64,
    pub expected_regret_vs_expert: Option<f64>,
    pub min_conditional_error: Option<f64>,
    pub agnostic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameReport {
    pub learner: String,
    pub adversary: String,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub per_trial: Vec<TrialSummary>,
    pub mistakes: Option<Stats>,
    pub expected_mistakes: Option<Stats>,
    pub best_hypothesis_mistakes: Option<Stats>,
    pub best_expert_mistakes: Option<Stats>,
    pub realizing_mistakes: Option<Stats>,
    pub regret: Option<Stats>,
    pub expected_regret: Option<Stats>,
    pub expected_regret_vs_expert: Option<Stats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub transcripts: Vec<GameTranscript>,
}

impl GameReport {
    /// Header plus one row per trial.
    pub fn csv(&self) -> String {
        let mut out = String::from("trial,mistakes,best_h,best_expert,regret\n");
        let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
        for t in &self.per_trial {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t.trial,
                t.mistakes,
                opt(t.best_hypothesis_mistakes),
                opt(t.best_expert_mistakes),
                t.regret
            ));
        }
        out
    }
}

/// Independent seeds for trial `trial`: `(learner, adversary)`.
fn trial_seeds(seed: u64, trial: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (rng.next_u64(), rng.next_u64())
}

/// Plays one game of `horizon` rounds.
pub fn play(
    learner: &LearnerSpec,
    adversary: &AdversarySpec,
    horizon: usize,
    trial: usize,
    seed: u64,
    options: &GameOptions,
) -> Result<GameTranscript> {
    let (ls, adv_seed) = trial_seeds(seed, trial);
    let mut l = learner.build(horizon, ls)?;
    let mut a = adversary.build(learner, horizon, trial, adv_seed)?;
    let class = learner.class();
    let mut rounds = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let m = a.next(l.as_mut())?;
        let p = l.predict(m.x)?;
        l.update(m.x, m.y)?;
        let conditional_error = m.conditional_one.map(|q| if m.y == 1 { 1.0 - q } else { q });
        rounds.push(Round {
            x: m.x,
            probability: p.probability,
            prediction: p.bit,
            label: m.y,
            conditional_error,
            estimate_expected: m.estimate_expected,
            estimate_resampled: m.estimate_resampled,
            estimate_exact: m.estimate_exact,
        });
    }
    let mistakes = rounds.iter().filter(|r| r.prediction != r.label).count() as u64;
    let expected_mistakes: f64 = rounds
        .iter()
        .map(|r| if r.label == 1 { 1.0 - r.probability } else { r.probability })
        .sum();

    let count = |h: usize| rounds.iter().filter(|r| class.value(h, r.x) != r.label).count() as u64;
    let best_h = (0..class.len()).map(|h| (count(h), h)).min();

    let comparator = options.comparator.as_ref().or(learner.family());
    let best_e = match comparator {
        Some(f) if f.horizon() >= horizon && !f.is_empty() => {
            let xs: Vec<usize> = rounds.iter().map(|r| r.x).collect();
            let table = FamilyWalk::run(f, &xs)?;
            table
                .iter()
                .enumerate()
                .map(|(e, row)| {
                    let m = row.iter().zip(&rounds).filter(|(&b, r)| b != r.label).count() as u64;
                    (m, e)
                })
                .min()
        }
        _ => None,
    };

    let realizing = match adversary {
        AdversarySpec::GoodTree(c) if horizon == c.tree.depth() => {
            let branch = rounds.iter().fold(0usize, |b, r| (b << 1) | r.label as usize);
            (0..class.len()).find(|&h| c.tree.tree().branch_of(class, h, Some(c.tree.eps())) == Some(branch))
        }
        _ => None,
    };

    let comparators: Vec<u64> = best_h.map(|b| b.0).into_iter().chain(best_e.map(|b| b.0)).collect();
    let floor = comparators.iter().min().copied().unwrap_or(0) as f64;
    Ok(GameTranscript {
        trial,
        mistakes,
        expected_mistakes,
        best_hypothesis: best_h.map(|b| b.1),
        best_hypothesis_mistakes: best_h.map(|b| b.0),
        best_expert: best_e.map(|b| b.1),
        best_expert_mistakes: best_e.map(|b| b.0),
        realizing_hypothesis: realizing,
        realizing_mistakes: realizing.map(count),
        regret: mistakes as f64 - floor,
        expected_regret: expected_mistakes - floor,
        expected_regret_vs_expert: best_e.map(|b| expected_mistakes - b.0 as f64),
        agnostic: l.agnostic(),
        rounds,
    })
}

/// Runs `trials` seeded games in parallel and aggregates them.
pub fn run_game(
    learner: &LearnerSpec,
    adversary: &AdversarySpec,
    horizon: usize,
    trials: usize,
    seed: u64,
    options: &GameOptions,
) -> Result<GameReport> {
    let results = par::map_range(0..trials, |t| play(learner, adversary, horizon, t, seed, options));
    let transcripts = results.into_iter().collect::<Result<Vec<_>>>()?;
    let per_trial: Vec<TrialSummary> = transcripts
        .iter()
        .map(|t| TrialSummary {
            trial: t.trial,
            mistakes: t.mistakes,
            expected_mistakes: t.expected_mistakes,
            best_hypothesis_mistakes: t.best_hypothesis_mistakes,
            best_expert_mistakes: t.best_expert_mistakes,
            realizing_mistakes: t.realizing_mistakes,
            regret: t.regret,
            expected_regret: t.expected_regret,
            expected_regret_vs_expert: t.expected_regret_vs_expert,
            min_conditional_error: t.min_conditional_error(),
            agnostic: t.agnostic,
        })
        .collect();
    let stat = |f: &dyn Fn(&TrialSummary) -> Option<f64>| -> Option<Stats> {
        let v: Option<Vec<f64>> = per_trial.iter().map(f).collect();
        v.and_then(|v| Stats::of(&v))
    };
    Ok(GameReport {
        learner: learner.name(),
        adversary: adversary.name(),
        horizon,
        trials,
        seed,
        mistakes: stat(&|t| Some(t.mistakes as f64)),
        expected_mistakes: stat(&|t| Some(t.expected_mistakes)),
        best_hypothesis_mistakes: stat(&|t| t.best_hypothesis_mistakes.map(|v| v as f64)),
        best_expert_mistakes: stat(&|t| t.best_expert_mistakes.map(|v| v as f64)),
        realizing_mistakes: stat(&|t| t.realizing_mistakes.map(|v| v as f64)),
        regret: stat(&|t| Some(t.regret)),
        expected_regret: stat(&|t| Some(t.expected_regret)),
        expected_regret_vs_expert: stat(&|t| t.expected_regret_vs_expert),
        per_trial,
        transcripts: if options.keep_transcripts { transcripts } else { Vec::new() },
    })
}

/// Checks the transcript invariants: probabilities in `[0, 1]`, regret
/// identities, and (for adaptive tree adversaries) error probability at
/// least 1/2 every round.
pub fn check_transcript(t: &GameTranscript, adaptive: bool) -> Result<()> {
    for (i, r) in t.rounds.iter().enumerate() {
        if !(0.0..=1.0).contains(&r.probability) {
            return Err(Error::contract(format!("round {i}: probability {} outside [0, 1]", r.probability)));
        }
        if adaptive {
            match r.conditional_error {
                Some(e) if e >= 0.5 - 1e-12 => {}
                other => {
                    return Err(Error::contract(format!("round {i}: conditional error {other:?} below 1/2")));
                }
            }
        }
    }
    let floor = t
        .best_hypothesis_mistakes
        .into_iter()
        .chain(t.best_expert_mistakes)
        .min()
        .unwrap_or(0) as f64;
    if (t.regret - (t.mistakes as f64 - floor)).abs() > 1e-9 {
        return Err(Error::contract("regret differs from mistakes minus the best comparator"));
    }
    Ok(())
}
