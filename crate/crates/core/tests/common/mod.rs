#![allow(dead_code)]

use std::path::PathBuf;

use littlestone::{generate, io, BitSet, HypothesisClass};

pub fn fixture(name: &str) -> HypothesisClass {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    io::load(&path).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// Every nonempty class over `n` points, indexed by the mask of functions
/// it contains (function `f` has bit `x` equal to bit `x` of `f`).
pub fn all_classes(n: usize) -> Vec<HypothesisClass> {
    let funcs = 1usize << n;
    (1u64..(1u64 << funcs))
        .map(|mask| {
            let rows = (0..funcs)
                .filter(|f| (mask >> f) & 1 == 1)
                .map(|f| BitSet::from_mask(n, f as u64))
                .collect();
            HypothesisClass::new(n, rows).unwrap()
        })
        .collect()
}

fn unit_vectors(n: usize) -> HypothesisClass {
    HypothesisClass::new(n, (0..n).map(|i| BitSet::from_indices(n, [i])).collect()).unwrap()
}

/// Thirty small classes, none of dimension above 3.
pub fn corpus() -> Vec<(String, HypothesisClass)> {
    let mut out: Vec<(String, HypothesisClass)> = vec![
        ("full1".into(), generate::full(1).unwrap()),
        ("full2".into(), generate::full(2).unwrap()),
        ("full3".into(), fixture("full3.hc")),
        ("threshold8".into(), fixture("threshold8.hc")),
        ("dual_threshold5".into(), fixture("dual_threshold5.hc")),
        ("singleton_0110".into(), generate::singleton("0110").unwrap()),
        ("singleton_1".into(), generate::singleton("1").unwrap()),
        ("singleton_000".into(), generate::singleton("000").unwrap()),
        ("constants3".into(), HypothesisClass::from_bit_strs(&["000", "111"]).unwrap()),
        ("swap2".into(), HypothesisClass::from_bit_strs(&["01", "10"]).unwrap()),
        ("units4".into(), unit_vectors(4)),
        ("units5".into(), unit_vectors(5)),
    ];
    for n in 1..=7 {
        out.push((format!("threshold{n}"), generate::threshold(n)));
    }
    for i in 0..11u64 {
        let n = 3 + (i as usize % 3);
        let m = 3 + (i as usize * 5) % ((1 << n) - 3).min(12);
        let c = generate::random_capped_ldim(n, m, 3, 100 + i, generate::DEFAULT_RETRIES).unwrap();
        out.push((format!("random_{n}_{m}_{}", 100 + i), c));
    }
    assert_eq!(out.len(), 30);
    out
}

/// The corpus plus the noisy block class used for the game.
pub fn fixtures() -> Vec<(String, HypothesisClass)> {
    let mut out = corpus();
    out.push(("noisy_full3x5".into(), fixture("noisy_full3x5.hc")));
    out
}

/// Littlestone dimension by the plain rank recursion on explicit rows,
/// without memo or pruning.
pub fn naive_ldim(rows: &[Vec<u8>]) -> i32 {
    if rows.is_empty() {
        return -1;
    }
    let n = rows[0].len();
    let mut best = 0;
    for x in 0..n {
        let zeros: Vec<Vec<u8>> = rows.iter().filter(|r| r[x] == 0).cloned().collect();
        let ones: Vec<Vec<u8>> = rows.iter().filter(|r| r[x] == 1).cloned().collect();
        if zeros.is_empty() || ones.is_empty() {
            continue;
        }
        best = best.max(1 + naive_ldim(&zeros).min(naive_ldim(&ones)));
    }
    best
}

pub fn rows_of(class: &HypothesisClass, set: &[usize]) -> Vec<Vec<u8>> {
    set.iter()
        .map(|&h| (0..class.domain_size()).map(|x| class.value(h, x)).collect())
        .collect()
}
