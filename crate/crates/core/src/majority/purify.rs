use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::class::HypothesisClass;
use crate::dims::{half_graph_violations, is_approx_half_graph, is_half_graph};
use crate::epsilon::Epsilon;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Purified {
    pub points: Vec<usize>,
    pub hypotheses: Vec<usize>,
    /// Positions kept from the input sequences.
    pub positions: Vec<usize>,
    /// 1-based trial that succeeded.
    pub trial: usize,
}

/// Target length `⌊√(1/ε)⌋`, the largest `k` with `ε · k² ≤ 1`.
pub fn purify_target(eps: Epsilon) -> usize {
    let (p, q) = (eps.numer() as u128, eps.denom() as u128);
    let mut k = ((q as f64 / p as f64).sqrt()) as u128;
    while p * (k + 1) * (k + 1) <= q {
        k += 1;
    }
    while k > 0 && p * k * k > q {
        k -= 1;
    }
    k as usize
}

/// Samples `⌊√(1/ε)⌋` positions of an ε-approximate half-graph until the
/// subsequence is an exact half-graph, for up to `trials` attempts.
///
/// Positions are drawn uniformly without replacement and kept in order; a
/// sample succeeds when it avoids every violated pair.
pub fn purify_halfgraph(
    points: &[usize],
    hyps: &[usize],
    class: &HypothesisClass,
    eps: Epsilon,
    trials: usize,
    seed: u64,
) -> Result<Option<Purified>> {
    if points.len() != hyps.len() {
        return Err(Error::domain(format!(
            "{} points against {} hypotheses",
            points.len(),
            hyps.len()
        )));
    }
    if !is_approx_half_graph(class, points, hyps, eps) {
        return Err(Error::domain(format!(
            "input has {} violated pairs, more than ε·k² for k = {}",
            half_graph_violations(class, points, hyps),
            points.len()
        )));
    }
    let k = purify_target(eps);
    let len = points.len();
    if k > len {
        return Err(Error::domain(format!(
            "input of length {len} is shorter than the target length {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 1..=trials {
        let mut positions = sample(&mut rng, len, k).into_vec();
        positions.sort_unstable();
        let ps: Vec<usize> = positions.iter().map(|&i| points[i]).collect();
        let hs: Vec<usize> = positions.iter().map(|&i| hyps[i]).collect();
        if is_half_graph(class, &ps, &hs) {
            return Ok(Some(Purified {
                points: ps,
                hypotheses: hs,
                positions,
                trial,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    #[test]
    fn target_length() {
        assert_eq!(purify_target(Epsilon::new(1, 100).unwrap()), 10);
        assert_eq!(purify_target(Epsilon::new(1, 99).unwrap()), 9);
        assert_eq!(purify_target(Epsilon::new(1, 4).unwrap()), 2);
        assert_eq!(purify_target(Epsilon::new(1, 3).unwrap()), 1);
    }

    #[test]
    fn exact_input_succeeds_first_trial() {
        let t = generate::threshold(12);
        let seq: Vec<usize> = (0..12).collect();
        let r = purify_halfgraph(&seq, &seq, &t, Epsilon::new(1, 100).unwrap(), 1, 3)
            .unwrap()
            .unwrap();
        assert_eq!(r.trial, 1);
        assert_eq!(r.points.len(), 10);
        assert!(is_half_graph(&t, &r.points, &r.hypotheses));
    }

    #[test]
    fn planted_flips_are_purified() {
        let e = Epsilon::new(1, 100).unwrap();
        let t = generate::with_flips(&generate::threshold(16), &[(9, 2), (3, 12)]).unwrap();
        let seq: Vec<usize> = (0..16).collect();
        assert_eq!(half_graph_violations(&t, &seq, &seq), 2);
        let r = purify_halfgraph(&seq, &seq, &t, e, 100, 11).unwrap().unwrap();
        assert!(is_half_graph(&t, &r.points, &r.hypotheses));
        assert_eq!(
            purify_halfgraph(&seq, &seq, &t, e, 100, 11).unwrap(),
            Some(r),
            "seeded runs repeat"
        );
    }

    #[test]
    fn too_many_violations_rejected() {
        let e = Epsilon::new(1, 100).unwrap();
        let flips: Vec<(usize, usize)> = (0..5).map(|i| (i + 8, i)).collect();
        let t = generate::with_flips(&generate::threshold(16), &flips).unwrap();
        let seq: Vec<usize> = (0..16).collect();
        assert!(purify_halfgraph(&seq, &seq, &t, e, 10, 0).is_err());
    }
}
