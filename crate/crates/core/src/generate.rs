//! Fixture generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitSet;
use crate::class::HypothesisClass;
use crate::dims::LdimEngine;
use crate::error::{Error, Result};

/// Default restart budget for [`random_capped_ldim`].
pub const DEFAULT_RETRIES: usize = 1_000;

/// Generator names accepted by [`generate`].
pub const KINDS: &[&str] = &["full", "singleton", "threshold", "random", "random_capped_ldim"];

/// Dispatches on a generator name with integer parameters.
///
/// `singleton` takes its bits as individual 0/1 parameters.
pub fn generate(kind: &str, params: &[u64], seed: Option<u64>) -> Result<HypothesisClass> {
    let need = |count: usize| -> Result<()> {
        if params.len() != count {
            return Err(Error::domain(format!(
                "generator `{kind}` takes {count} parameter(s), got {}",
                params.len()
            )));
        }
        Ok(())
    };
    let seed_or_err = || seed.ok_or_else(|| Error::domain(format!("generator `{kind}` needs a seed")));
    match kind {
        "full" => {
            need(1)?;
            full(params[0] as usize)
        }
        "singleton" => {
            let mut bits = String::with_capacity(params.len());
            for &p in params {
                match p {
                    0 => bits.push('0'),
                    1 => bits.push('1'),
                    _ => return Err(Error::domain("singleton bits must be 0 or 1")),
                }
            }
            singleton(&bits)
        }
        "threshold" => {
            need(1)?;
            Ok(threshold(params[0] as usize))
        }
        "random" => {
            need(2)?;
            random(params[0] as usize, params[1] as usize, seed_or_err()?)
        }
        "random_capped_ldim" => {
            need(3)?;
            random_capped_ldim(
                params[0] as usize,
                params[1] as usize,
                params[2] as i32,
                seed_or_err()?,
                DEFAULT_RETRIES,
            )
        }
        _ => Err(Error::domain(format!(
            "unknown generator `{kind}` (expected one of {})",
            KINDS.join(", ")
        ))),
    }
}

/// All `2^n` functions on `n` points, in binary-counting order of the bit string.
pub fn full(n: usize) -> Result<HypothesisClass> {
    if n > 20 {
        return Err(Error::Resource {
            cap: "full class size",
            needed: 1u128 << n.min(127),
            limit: 1 << 20,
        });
    }
    let rows = (0..1u64 << n)
        .map(|i| {
            let mut row = BitSet::new(n);
            for x in 0..n {
                // bit string read left to right as a binary numeral
                if (i >> (n - 1 - x)) & 1 == 1 {
                    row.insert(x);
                }
            }
            row
        })
        .collect();
    HypothesisClass::new(n, rows)
}

pub fn singleton(bits: &str) -> Result<HypothesisClass> {
    HypothesisClass::from_bit_strs(&[bits])
}

/// The `n + 1` thresholds on `n` points: `h_j(x_i) = 1` iff `i < j`.
pub fn threshold(n: usize) -> HypothesisClass {
    let rows = (0..=n)
        .map(|j| BitSet::from_indices(n, 0..j))
        .collect();
    HypothesisClass::new(n, rows).expect("thresholds are distinct")
}

/// `m` distinct uniformly random bit strings of length `n`.
pub fn random(n: usize, m: usize, seed: u64) -> Result<HypothesisClass> {
    if n < 64 && (m as u128) > (1u128 << n) {
        return Err(Error::domain(format!(
            "cannot draw {m} distinct rows on {n} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::with_capacity(m);
    let mut rows = Vec::with_capacity(m);
    while rows.len() < m {
        let mut row = BitSet::new(n);
        for x in 0..n {
            if rng.gen::<bool>() {
                row.insert(x);
            }
        }
        if seen.insert(row.clone()) {
            rows.push(row);
        }
    }
    HypothesisClass::new(n, rows)
}

/// A random class of `m` distinct rows with Littlestone dimension at most `d`.
///
/// Each attempt walks the `2^n` strings in a seeded random order and keeps a
/// string only if the class stays within dimension `d`; an attempt that runs
/// out of strings before reaching `m` is restarted, up to `retries` times.
pub fn random_capped_ldim(
    n: usize,
    m: usize,
    d: i32,
    seed: u64,
    retries: usize,
) -> Result<HypothesisClass> {
    if n > 16 {
        return Err(Error::Resource {
            cap: "random_capped_ldim domain size",
            needed: n as u128,
            limit: 16,
        });
    }
    if (m as u128) > (1u128 << n) {
        return Err(Error::domain(format!(
            "cannot draw {m} distinct rows on {n} points"
        )));
    }
    if m == 0 {
        return Ok(HypothesisClass::empty(n));
    }
    if d < 0 {
        return Err(Error::domain("dimension cap must be at least 0 for a nonempty class"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<u64> = (0..1u64 << n).collect();
    for _ in 0..retries.max(1) {
        order.shuffle(&mut rng);
        let mut rows: Vec<BitSet> = Vec::with_capacity(m);
        for &code in &order {
            let candidate = BitSet::from_indices(n, (0..n).filter(|x| (code >> x) & 1 == 1));
            rows.push(candidate);
            let class = HypothesisClass::new(n, rows.clone()).expect("distinct codes");
            if LdimEngine::new(&class).ldim_all() > d {
                rows.pop();
            }
            if rows.len() == m {
                return HypothesisClass::new(n, rows);
            }
        }
    }
    Err(Error::Resource {
        cap: "random_capped_ldim retries",
        needed: retries as u128 + 1,
        limit: retries as u128,
    })
}

/// Copy of `class` with the listed `(hypothesis, point)` bits flipped.
/// Fails if the flips make two rows coincide.
pub fn with_flips(class: &HypothesisClass, flips: &[(usize, usize)]) -> Result<HypothesisClass> {
    let mut rows = class.rows().to_vec();
    for &(h, x) in flips {
        if h >= rows.len() || x >= class.domain_size() {
            return Err(Error::domain(format!("flip ({h}, {x}) out of range")));
        }
        let v = rows[h].contains(x);
        rows[h].set(x, !v);
    }
    HypothesisClass::new(class.domain_size(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full2_rows() {
        let f = full(2).unwrap();
        let rows: Vec<_> = f.rows().iter().map(|r| r.to_bit_string()).collect();
        assert_eq!(rows, vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn threshold3_rows() {
        let t = threshold(3);
        let rows: Vec<_> = t.rows().iter().map(|r| r.to_bit_string()).collect();
        assert_eq!(rows, vec!["000", "100", "110", "111"]);
    }

    #[test]
    fn threshold_rule_holds() {
        for n in 0..10 {
            let t = threshold(n);
            assert_eq!(t.len(), n + 1);
            for j in 0..=n {
                for i in 0..n {
                    assert_eq!(t.value(j, i) == 1, i < j);
                }
            }
        }
    }

    #[test]
    fn random_is_seeded() {
        assert_eq!(random(3, 4, 1).unwrap(), random(3, 4, 1).unwrap());
        assert!(random(2, 5, 1).is_err());
        assert_eq!(random(3, 8, 9).unwrap().len(), 8);
    }

    #[test]
    fn capped_ldim_respects_cap() {
        let c = random_capped_ldim(6, 20, 2, 7, DEFAULT_RETRIES).unwrap();
        assert_eq!(c.len(), 20);
        assert!(LdimEngine::new(&c).ldim_all() <= 2);
        assert_eq!(c, random_capped_ldim(6, 20, 2, 7, DEFAULT_RETRIES).unwrap());
        // a class of 8 hypotheses on 3 points needs dimension 3
        assert!(random_capped_ldim(3, 8, 2, 1, 3).is_err());
    }

    #[test]
    fn dispatch() {
        assert_eq!(generate("full", &[2], None).unwrap().len(), 4);
        assert_eq!(generate("singleton", &[0, 1, 1, 0], None).unwrap().domain_size(), 4);
        assert!(generate("random", &[3, 4], None).is_err());
        assert!(generate("nope", &[], None).is_err());
    }
}
