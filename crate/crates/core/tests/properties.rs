mod common;

use proptest::prelude::*;

use littlestone::dims::{self, threshold_dim, vcdim};
use littlestone::experts::{build_cover, FamilyWalk};
use littlestone::game::{run_game, AdversarySpec, GameOptions, LearnerSpec};
use littlestone::{generate, io, par, Epsilon, PartialLabeling};

fn class_strategy() -> impl Strategy<Value = littlestone::HypothesisClass> {
    (1usize..=6, any::<u64>()).prop_flat_map(|(n, seed)| {
        let max = (1usize << n).min(20);
        (1..=max).prop_map(move |m| generate::random(n, m, seed).unwrap())
    })
}

fn labeling(n: usize) -> impl Strategy<Value = Vec<Option<u8>>> {
    proptest::collection::vec(proptest::option::of(0u8..2), n)
}

fn to_partial(v: &[Option<u8>]) -> PartialLabeling {
    PartialLabeling::from_pairs(v.iter().enumerate().filter_map(|(x, b)| b.map(|b| (x, b)))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimension_inequalities(class in class_strategy()) {
        let d = dims::ldim(&class).value;
        let rows = common::rows_of(&class, &class.all().to_indices());
        prop_assert_eq!(d, common::naive_ldim(&rows) as i64);
        prop_assert!(vcdim(&class, 1 << 24).value <= d);
        prop_assert!((1u64 << d) <= class.len() as u64);
        let t = threshold_dim(&class, 1 << 24);
        prop_assert!(t.is_exact());
        if t.value >= 1 {
            prop_assert!(63 - (t.value as u64).leading_zeros() as i64 <= d);
        }
    }

    #[test]
    fn restriction_composes((class, a, b) in class_strategy().prop_flat_map(|c| {
        let n = c.domain_size();
        (Just(c), labeling(n), labeling(n))
    })) {
        let (ga, gb) = (to_partial(&a), to_partial(&b));
        let both = class.consistent(&ga).unwrap().intersection(&class.consistent(&gb).unwrap());
        match ga.union(&gb) {
            Ok(g) => prop_assert_eq!(class.consistent(&g).unwrap(), both),
            Err(_) => prop_assert!(both.is_empty()),
        }
        let r = class.restrict(&ga).unwrap();
        for (j, &h) in r.kept.iter().enumerate() {
            prop_assert_eq!(r.class.row(j), class.row(h));
        }
    }

    #[test]
    fn dual_transposes(class in class_strategy()) {
        let dual = class.dualize();
        for x in 0..class.domain_size() {
            for h in 0..class.len() {
                prop_assert_eq!(dual.class.value(dual.point_to_hypothesis[x], h), class.value(h, x));
            }
        }
    }

    #[test]
    fn io_round_trips(class in class_strategy()) {
        let text = io::to_text(&class).unwrap();
        let from_text = io::parse(&text).unwrap();
        prop_assert_eq!(from_text.rows(), class.rows());
        let doc = io::to_structured(&class).unwrap();
        let from_doc = io::parse(&doc).unwrap();
        prop_assert_eq!(from_doc.rows(), class.rows());
    }

    #[test]
    fn epsilon_comparisons(p in 1u64..50, extra in 1u64..50, count in 0usize..200, total in 0usize..200) {
        let q = 2 * p + extra;
        let e = Epsilon::new(p, q).unwrap();
        let lhs = count as u128 * q as u128;
        let rhs = p as u128 * total as u128;
        prop_assert_eq!(e.below(count, total), lhs < rhs);
        prop_assert_eq!(e.at_most(count, total), lhs <= rhs);
        prop_assert_eq!(e.co_at_least(count, total), lhs >= (q - p) as u128 * total as u128);
    }

    #[test]
    fn experts_depend_only_on_prefix(seq in proptest::collection::vec(0usize..5, 1..7), cut in 0usize..7) {
        let class = generate::threshold(5);
        let family = build_cover(&class, 6).unwrap();
        let full = FamilyWalk::run(&family, &seq).unwrap();
        let cut = cut.min(seq.len());
        let prefix = FamilyWalk::run(&family, &seq[..cut]).unwrap();
        for (a, b) in full.iter().zip(&prefix) {
            prop_assert_eq!(&a[..cut], &b[..]);
        }
    }
}

#[test]
fn game_reports_ignore_scheduling() {
    let class = generate::threshold(6);
    let family = build_cover(&class, 12).unwrap();
    let sequences: Vec<Vec<(usize, u8)>> = (0..8)
        .map(|s| (0..12).map(|i| ((i * 7 + s) % 6, ((i * s) % 2) as u8)).collect())
        .collect();
    let learner = LearnerSpec::mw(family);
    let adversary = AdversarySpec::replay(sequences);
    let options = GameOptions::default();
    let a = run_game(&learner, &adversary, 12, 16, 9, &options).unwrap();
    let b = par::sequentially(|| run_game(&learner, &adversary, 12, 16, 9, &options).unwrap());
    assert_eq!(a, b);
}
