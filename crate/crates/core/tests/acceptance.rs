//! Desk-scale acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use littlestone::dims::{
    self, approx_ldim, good_tree_depth, ldim_oracle, threshold_dim, vcdim, virtual_ldim,
    virtual_threshold_dim, Caps, LdimEngine, Status, Witness,
};
use littlestone::experts::{
    binomial_sum, build_cover, mutation_control, verify_cover, verify_mistake_cover, TreeSource,
};
use littlestone::game::{
    check_transcript, run_game, AdversaryMode, AdversarySpec, Estimator, GameOptions, GoodTree,
    GoodTreeConfig, LearnerSpec,
};
use littlestone::majority::{
    check_axioms, is_excellent_subset, ldim_largeness, purify_halfgraph, Excellence, Excellent,
    Extractor, Goodness, HalfLargeness, LargenessRelation,
};
use littlestone::{generate, Epsilon, HypSet, HypothesisClass};

struct Outcome {
    pass: bool,
    detail: String,
    /// Config echo plus results, for randomized runs.
    record: Option<String>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            detail,
            record: None,
        }
    }

    fn recorded(pass: bool, detail: String, record: serde_json::Value) -> Self {
        Outcome {
            pass,
            detail,
            record: Some(record.to_string()),
        }
    }
}

fn eps(p: u64, q: u64) -> Epsilon {
    Epsilon::new(p, q).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let classes = common::all_classes(3);
    let mut mismatches = 0;
    let mut vc_above = 0;
    for c in &classes {
        let fast = dims::ldim(c).value;
        let oracle = ldim_oracle(c, 3).map(|r| r.value).unwrap_or(i64::MIN);
        let naive = common::naive_ldim(&common::rows_of(c, &c.all().to_indices())) as i64;
        if fast != oracle || fast != naive {
            mismatches += 1;
        }
        if vcdim(c, 1 << 20).value > fast {
            vc_above += 1;
        }
    }
    let took = start.elapsed();
    Outcome::new(
        classes.len() == 255 && mismatches == 0 && vc_above == 0 && took < Duration::from_secs(60),
        format!(
            "{} classes, {mismatches} oracle mismatches, {vc_above} with vcdim > ldim, {}",
            classes.len(),
            secs(took)
        ),
    )
}

fn dimension_drops() -> Outcome {
    let mut checked = 0u64;
    let mut exceptions = 0u64;
    for c in common::all_classes(3) {
        let engine = LdimEngine::new(&c);
        // Every version space H_g for partial labelings g of the domain.
        let mut sets = vec![c.all()];
        for x in 0..3 {
            let mut next = Vec::new();
            for s in &sets {
                let (z, o) = engine.split(s, x);
                next.extend([s.clone(), z, o]);
            }
            sets = next;
        }
        for s in &sets {
            let d = engine.ldim(s);
            for x in 0..3 {
                let (z, o) = engine.split(s, x);
                if z.is_empty() || o.is_empty() {
                    continue;
                }
                checked += 1;
                let (zr, or) = (
                    common::naive_ldim(&common::rows_of(&c, &z.to_indices())),
                    common::naive_ldim(&common::rows_of(&c, &o.to_indices())),
                );
                if zr.min(or) >= d || zr != engine.ldim(&z) || or != engine.ldim(&o) {
                    exceptions += 1;
                }
            }
        }
    }
    Outcome::new(
        checked > 0 && exceptions == 0,
        format!("{checked} two-sided splits, {exceptions} exceptions"),
    )
}

fn excellent_regime() -> Outcome {
    let e = eps(1, 10);
    let t8 = generate::threshold(8);
    let ex = Extractor::new(&t8, e);
    let r = ex.extract_excellent(&t8.all()).unwrap();
    let size = r.set.count();
    let verdict = is_excellent_subset(&r.set, &t8, e, None).unwrap();
    let mut pass = size * 1000 >= 9 && verdict == Excellence::Excellent && r.bound_holds;
    let mut detail = format!("threshold8 |A| = {size}, {:?}", verdict_name(&verdict));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut records = Vec::new();
    let mut failures = 0;
    for i in 0..50u64 {
        let n = rng.gen_range(3..=6usize);
        let max_m = if n == 3 { 8 } else if n == 4 { 15 } else { 20 };
        let m = rng.gen_range(2..=max_m);
        let seed = 300 + i;
        let c = generate::random_capped_ldim(n, m, 3, seed, generate::DEFAULT_RETRIES).unwrap();
        let ex = Extractor::new(&c, e);
        let r = ex.extract_excellent(&c.all()).unwrap();
        let v = is_excellent_subset(&r.set, &c, e, None).unwrap();
        if v != Excellence::Excellent || !r.bound_holds || dims::ldim(&c).value > 3 {
            failures += 1;
        }
        records.push(json!({"n": n, "m": m, "seed": seed, "output": r.output}));
    }
    pass &= failures == 0;
    detail.push_str(&format!("; 50 random classes, {failures} failures"));
    Outcome::recorded(pass, detail, json!({"criterion": 3, "rng_seed": 3, "runs": records}))
}

fn verdict_name(v: &Excellence) -> &'static str {
    match v {
        Excellence::Excellent => "excellent",
        Excellence::Violated { .. } => "violated",
        Excellence::Indeterminate { .. } => "indeterminate",
    }
}

fn dynamic_cover() -> Outcome {
    let mut pass = true;
    let mut size_mismatch = 0;
    let mut uncovered = 0;
    let mut trees = 0;
    for c in common::all_classes(2) {
        let fam = build_cover(&c, 3).unwrap();
        if fam.len() as u128 != binomial_sum(3, dims::ldim(&c).value) {
            size_mismatch += 1;
        }
        let r = verify_cover(&fam, &TreeSource::Exhaustive { cap: 1 << 20 }).unwrap();
        trees += r.trees_checked;
        uncovered += r.failure_count;
    }
    pass &= size_mismatch == 0 && uncovered == 0 && trees == 15 * 128;

    let t4 = generate::threshold(4);
    let fam = build_cover(&t4, 3).unwrap();
    let source = TreeSource::Sampled { count: 500, seed: 3 };
    let sampled = verify_cover(&fam, &source).unwrap();
    pass &= sampled.covered() && sampled.trees_checked == 500 && fam.len() as u128 == binomial_sum(3, 2);

    let full2 = build_cover(&generate::full(2).unwrap(), 3).unwrap();
    let m1 = mutation_control(&full2, &TreeSource::Exhaustive { cap: 1 << 20 }).unwrap();
    let m2 = mutation_control(&fam, &source).unwrap();
    let broken = |m: &littlestone::experts::Mutation| m.report.as_ref().map_or(0, |r| r.failure_count);
    pass &= broken(&m1) >= 1 && broken(&m2) >= 1;
    Outcome::recorded(
        pass,
        format!(
            "15 two-point classes over {trees} trees: {uncovered} uncovered, {size_mismatch} size mismatches; \
             threshold4 500 sampled trees: {} uncovered; mutation failures {} / {}",
            sampled.failure_count,
            broken(&m1),
            broken(&m2)
        ),
        json!({"criterion": 4, "sampled": sampled, "mutation_full2": m1, "mutation_threshold4": m2}),
    )
}

fn mistake_sets() -> Outcome {
    let t8 = generate::threshold(8);
    let fam = build_cover(&t8, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut missing = 0;
    let mut records = Vec::new();
    for _ in 0..200 {
        let seq: Vec<usize> = (0..6).map(|_| rng.gen_range(0..8)).collect();
        let h = rng.gen_range(0..t8.len());
        let branch: Vec<u8> = (0..6).map(|_| rng.gen_range(0..2u8)).collect();
        let r = verify_mistake_cover(&fam, &seq, h, &branch).unwrap();
        if !r.covered() {
            missing += 1;
        }
        records.push(json!([seq, h, branch, r.expert]));
    }
    Outcome::recorded(
        missing == 0,
        format!("threshold8 T=6, 200 triples, {missing} without a matching expert"),
        json!({"criterion": 5, "rng_seed": 5, "runs": records}),
    )
}

fn regret_lower_bound() -> Outcome {
    let start = Instant::now();
    let e = eps(1, 4);
    let class = common::fixture("noisy_full3x5.hc");
    let caps = Caps {
        max_depth: 4,
        ..Caps::default()
    };
    let found = good_tree_depth(&class, e, &caps);
    let Some(Witness::Tree { tree }) = found.witness else {
        return Outcome::new(false, "no good tree found".into());
    };
    let t = tree.depth();
    let good = Arc::new(GoodTree::new(&class, tree, e).unwrap());
    let adversary = AdversarySpec::GoodTree(GoodTreeConfig {
        tree: good,
        mode: AdversaryMode::Adaptive,
        estimator: Estimator::Expected,
        budget: 0,
        exact_cap: 0,
    });
    let trials = 1000;
    let tol = 3.0 * (t as f64 / (4.0 * trials as f64)).sqrt();
    let opts = GameOptions {
        keep_transcripts: true,
        ..GameOptions::default()
    };
    let mut pass = t >= 1 && found.status == Status::Exact;
    let mut parts = vec![format!("noisy_full3x5 depth {t}, tolerance {tol:.3}")];
    let mut records = Vec::new();
    for learner in [LearnerSpec::soa(&class), LearnerSpec::mw(build_cover(&class, t).unwrap())] {
        let report = run_game(&learner, &adversary, t, trials, 6, &opts).unwrap();
        let mistakes = report.mistakes.unwrap().mean;
        let realizing = report.realizing_mistakes.map(|s| s.mean);
        let transcripts_ok = report
            .transcripts
            .iter()
            .all(|tr| check_transcript(tr, true).is_ok() && tr.realizing_hypothesis.is_some());
        pass &= mistakes >= 0.5 * t as f64 - tol
            && realizing.is_some_and(|r| r <= 0.25 * t as f64 + tol)
            && transcripts_ok;
        parts.push(format!(
            "{}: mean mistakes {mistakes:.3}, realizing h {:.3}",
            report.learner,
            realizing.unwrap_or(f64::NAN)
        ));
        records.push(json!({"learner": report.learner, "csv": report.csv()}));
    }
    let took = start.elapsed();
    pass &= took < Duration::from_secs(300);
    parts.push(secs(took));
    Outcome::recorded(
        pass,
        parts.join("; "),
        json!({"criterion": 6, "seed": 6, "trials": trials, "runs": records}),
    )
}

fn mw_upper_bound() -> Outcome {
    let t8 = generate::threshold(8);
    let horizon = 64;
    let fam = build_cover(&t8, horizon).unwrap();
    let n = fam.len();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sequences: Vec<Vec<(usize, u8)>> = (0..20)
        .map(|_| (0..horizon).map(|_| (rng.gen_range(0..8), rng.gen_range(0..2u8))).collect())
        .collect();
    let report = run_game(
        &LearnerSpec::mw(fam),
        &AdversarySpec::replay(sequences),
        horizon,
        20,
        7,
        &GameOptions::default(),
    )
    .unwrap();
    let regret = report.expected_regret_vs_expert.unwrap();
    let bound = ((horizon as f64 / 2.0) * (n as f64).ln()).sqrt();
    Outcome::recorded(
        n as u128 == binomial_sum(64, 3) && regret.mean <= bound + 3.0 * regret.stderr,
        format!(
            "N = {n}, mean regret vs best expert {:.3} (sd {:.3}) against bound {bound:.3}",
            regret.mean, regret.sd
        ),
        json!({"criterion": 7, "seed": 7, "csv": report.csv()}),
    )
}

fn soa_mistake_bound() -> Outcome {
    let mut runs = 0u64;
    let mut exceptions = 0u64;
    for c in common::all_classes(3) {
        let d = dims::ldim(&c).value;
        let spec = LearnerSpec::soa(&c);
        for len in 0..=4u32 {
            for code in 0..3usize.pow(len) {
                let seq: Vec<usize> = (0..len).map(|i| (code / 3usize.pow(i)) % 3).collect();
                let mut labelings: Vec<Vec<u8>> =
                    (0..c.len()).map(|h| seq.iter().map(|&x| c.value(h, x)).collect()).collect();
                labelings.sort();
                labelings.dedup();
                for labels in labelings {
                    let mut l = spec.build(len as usize, 0).unwrap();
                    let mut mistakes = 0;
                    for (&x, &y) in seq.iter().zip(&labels) {
                        mistakes += (l.predict(x).unwrap().bit != y) as i64;
                        l.update(x, y).unwrap();
                    }
                    runs += 1;
                    if mistakes > d || l.agnostic() {
                        exceptions += 1;
                    }
                }
            }
        }
    }
    Outcome::new(exceptions == 0, format!("{runs} realizable runs, {exceptions} exceptions"))
}

fn largeness() -> Outcome {
    let mut checked = 0;
    let mut failed = Vec::new();
    for (name, c) in common::fixtures() {
        if c.len() > 8 {
            continue;
        }
        let r = check_axioms(&ldim_largeness(&c), &c, 1 << 20, 0);
        checked += 1;
        if !r.exhaustive || !r.all_hold() {
            failed.push(name);
        }
    }
    let control = check_axioms(&HalfLargeness { declared_bound: 2 }, &generate::full(2).unwrap(), 1 << 20, 0);

    let e = eps(1, 4);
    let mut classes = vec![("threshold8".to_string(), generate::threshold(8))];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..20u64 {
        let n = rng.gen_range(3..=6usize);
        let m = rng.gen_range(2..=if n == 3 { 8 } else { 15 });
        let c = generate::random_capped_ldim(n, m, 3, 900 + i, generate::DEFAULT_RETRIES).unwrap();
        classes.push((format!("random_{n}_{m}_{}", 900 + i), c));
    }
    let mut extraction_failures = 0;
    let mut records = Vec::new();
    for (name, c) in &classes {
        let ex = Extractor::new(c, e);
        let m = ldim_largeness(c);
        for property in [&Goodness as &dyn littlestone::majority::GoodProperty, &Excellent] {
            let r = ex.extract_largeness_agreeing(&c.all(), &m, property).unwrap();
            if !conditions_by_hand(c, e, &m, &r.set) || !ex.is_good(&r.set) {
                extraction_failures += 1;
            }
            records.push(json!({"class": name, "property": property.name(), "output": r.output}));
        }
    }
    Outcome::recorded(
        checked > 0 && failed.is_empty() && !control.all_hold() && extraction_failures == 0,
        format!(
            "{checked} fixture classes exhaustive, failing {failed:?}; half relation fails {} axiom(s); \
             {} extractions, {extraction_failures} failing the conditions",
            control.axioms.iter().filter(|a| !a.holds).count(),
            records.len()
        ),
        json!({"criterion": 9, "rng_seed": 9, "runs": records}),
    )
}

/// Per point: exactly one side is large, and a side is large iff it holds
/// at least a `1 − ε` share. The Ldim values come from the naive oracle.
fn conditions_by_hand(c: &HypothesisClass, e: Epsilon, m: &dyn LargenessRelation, a: &HypSet) -> bool {
    let total = a.count();
    let d = common::naive_ldim(&common::rows_of(c, &a.to_indices()));
    (0..c.domain_size()).all(|x| {
        let ones = a.intersection(c.col(x));
        let zeros = a.difference(c.col(x));
        let large = |s: &HypSet| common::naive_ldim(&common::rows_of(c, &s.to_indices())) == d;
        let share = |s: &HypSet| (s.count() as u64) * e.denom() >= (e.denom() - e.numer()) * total as u64;
        let (l0, l1) = (large(&zeros), large(&ones));
        l0 != l1
            && l0 == share(&zeros)
            && l1 == share(&ones)
            && l0 == m.large(&zeros, a)
            && l1 == m.large(&ones, a)
    })
}

fn dimension_coherence() -> Outcome {
    let e = eps(1, 4);
    let caps = Caps {
        max_depth: 3,
        ..Caps::default()
    };
    let mut bad = Vec::new();
    for (name, c) in common::corpus() {
        let ld = dims::ldim(&c).value;
        let td = threshold_dim(&c, caps.node_budget);
        let approx = approx_ldim(&c, e, &caps);
        let virt = virtual_ldim(&c, e, &caps);
        let vt = virtual_threshold_dim(&c, e, &caps);
        let small = c.domain_size() <= 5;
        let exact = approx.is_exact() && virt.is_exact() && vt.result.is_exact() && td.is_exact();
        let finite = [approx.value, virt.value, vt.result.value].iter().all(|&v| v <= c.len() as i64);
        if approx.value < ld || virt.value < ld || vt.result.value < td.value || !finite || (small && !exact) {
            bad.push(name);
        }
    }
    Outcome::new(bad.is_empty(), format!("30 corpus classes, violations {bad:?}"))
}

fn purification() -> Outcome {
    let e = eps(1, 100);
    let class = generate::with_flips(&generate::threshold(16), &[(9, 2), (3, 12)]).unwrap();
    let seq: Vec<usize> = (0..16).collect();
    let mut successes = 0;
    let mut records = Vec::new();
    for seed in 0..100u64 {
        let r = purify_halfgraph(&seq, &seq, &class, e, 100, seed).unwrap();
        if let Some(p) = &r {
            if p.points.len() == 10 && dims::is_half_graph(&class, &p.points, &p.hypotheses) {
                successes += 1;
            }
        }
        records.push(json!({"seed": seed, "result": r}));
    }
    Outcome::recorded(
        successes >= 95,
        format!("{successes}/100 seeds found an exact size-10 half-graph"),
        json!({"criterion": 11, "runs": records}),
    )
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let checks: [(&str, Check); 11] = [
        ("dimension oracle equivalence", oracle_equivalence),
        ("dimension drops on one side", dimension_drops),
        ("excellent extraction", excellent_regime),
        ("dynamic expert cover", dynamic_cover),
        ("mistake-set cover", mistake_sets),
        ("good-tree regret lower bound", regret_lower_bound),
        ("multiplicative weights upper bound", mw_upper_bound),
        ("SOA mistake bound", soa_mistake_bound),
        ("largeness axioms and extraction", largeness),
        ("approximate and virtual dimensions", dimension_coherence),
        ("half-graph purification", purification),
    ];
    let mut all = true;
    let mut randomized = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let out = check();
        all &= out.pass;
        println!("{} {:>2} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
        if let Some(record) = out.record {
            randomized.push((i + 1, *check, record));
        }
    }
    let mut differing = Vec::new();
    for (i, check, record) in &randomized {
        if check().record.as_deref() != Some(record.as_str()) {
            differing.push(*i);
        }
    }
    let pass = differing.is_empty() && !randomized.is_empty();
    all &= pass;
    println!(
        "{} 12 reproducibility: {} randomized runs repeated, differing {differing:?}",
        if pass { "PASS" } else { "FAIL" },
        randomized.len()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
