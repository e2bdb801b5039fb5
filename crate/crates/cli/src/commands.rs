use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use littlestone::dims::{
    self, approx_ldim, approx_threshold_dim, good_tree_depth, threshold_dim, vcdim, virtual_ldim,
    virtual_threshold_dim, DimResult, Status, Witness,
};
use littlestone::experts::{mutation_control, verify_cover, CoverReport, ExpertFamily, TreeSource};
use littlestone::game::{
    run_game, AdversaryMode, AdversarySpec, Estimator, GameOptions, GoodTree, GoodTreeConfig,
    LearnerSpec,
};
use littlestone::majority::{Excellence, Extraction, Extractor};
use littlestone::{generate, io, Epsilon, Error, HypothesisClass, Result};

use crate::args::{
    AdversaryKind, CoverArgs, DuelArgs, EstimatorArg, ExtractArgs, ExtractMode, GenArgs, Global,
    LearnerKind, ModeArg, OutputFormat,
};

/// Sampled tree count when neither --trees nor --exhaustive is given and the
/// tree space is over the cap.
const AUTO_TREES: usize = 1_000;

/// What a command produced, in every output form it supports.
pub struct Output {
    pub report: Value,
    pub text: String,
    pub csv: Option<String>,
    /// Some verdict is a bound or unsettled.
    pub indeterminate: bool,
}

impl Output {
    fn new(report: impl Serialize, text: String) -> Result<Self> {
        Ok(Output {
            report: serde_json::to_value(report)?,
            text,
            csv: None,
            indeterminate: false,
        })
    }
}

pub fn load_class(path: &Path) -> Result<HypothesisClass> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        io::parse(&text)
    } else {
        io::load(path).map_err(|e| match e {
            Error::Io(io) => Error::Domain(format!("{}: {io}", path.display())),
            other => other,
        })
    }
}

fn need_eps(g: &Global, what: &str) -> Result<Epsilon> {
    g.epsilon
        .ok_or_else(|| Error::Domain(format!("{what} needs --epsilon p/q")))
}

fn need_seed(g: &Global, what: &str) -> Result<u64> {
    g.seed.ok_or_else(|| Error::Domain(format!("{what} is randomized and needs --seed")))
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Exact => "exact",
        Status::LowerBound => "lower_bound",
    }
}

#[derive(Serialize)]
struct DimEntry {
    dimension: &'static str,
    #[serde(flatten)]
    result: DimResult,
}

pub fn analyze(g: &Global, path: &Path) -> Result<Output> {
    let class = load_class(path)?;
    let caps = g.caps();
    let mut entries = vec![
        DimEntry {
            dimension: "ldim",
            result: dims::ldim(&class),
        },
        DimEntry {
            dimension: "vcdim",
            result: vcdim(&class, g.node_budget),
        },
        DimEntry {
            dimension: "threshold_dim",
            result: threshold_dim(&class, g.node_budget),
        },
    ];
    let mut distinct = None;
    if let Some(e) = g.epsilon {
        let vt = virtual_threshold_dim(&class, e, &caps);
        distinct = Some(json!({"raw_distinct": vt.raw_distinct, "vote_distinct": vt.vote_distinct}));
        entries.extend([
            DimEntry {
                dimension: "approx_ldim",
                result: approx_ldim(&class, e, &caps),
            },
            DimEntry {
                dimension: "approx_threshold_dim",
                result: approx_threshold_dim(&class, e, g.node_budget),
            },
            DimEntry {
                dimension: "virtual_ldim",
                result: virtual_ldim(&class, e, &caps),
            },
            DimEntry {
                dimension: "good_tree_depth",
                result: good_tree_depth(&class, e, &caps),
            },
            DimEntry {
                dimension: "virtual_threshold_dim",
                result: vt.result,
            },
        ]);
    }
    if !g.emit_witness {
        for e in &mut entries {
            e.result.witness = None;
        }
    }
    let indeterminate = entries.iter().any(|e| !e.result.is_exact());

    let mut text = format!("domain {}, hypotheses {}\n", class.domain_size(), class.len());
    let mut csv = String::from("dimension,value,status\n");
    for e in &entries {
        let status = status_name(e.result.status);
        let _ = writeln!(text, "{:<22} {:>4}  {status}", e.dimension, e.result.value);
        let _ = writeln!(csv, "{},{},{status}", e.dimension, e.result.value);
        if let Some(w) = &e.result.witness {
            let _ = writeln!(text, "  witness: {}", describe_witness(w));
        }
    }
    let report = json!({
        "domain_size": class.domain_size(),
        "hypotheses": class.len(),
        "dimensions": entries,
        "virtual_threshold_counts": distinct,
    });
    let mut out = Output::new(report, text)?;
    out.csv = Some(csv);
    out.indeterminate = indeterminate;
    Ok(out)
}

fn describe_witness(w: &Witness) -> String {
    match w {
        Witness::Tree { tree } => {
            let labels: Vec<String> = tree
                .labels()
                .iter()
                .enumerate()
                .map(|(i, l)| format!("{}={}", dims::address(i), serde_json::to_string(l).unwrap_or_default()))
                .collect();
            format!("tree of depth {}: {}", tree.depth(), labels.join(" "))
        }
        Witness::Chain { points, hypotheses } => format!("chain points {points:?}, hypotheses {hypotheses:?}"),
        Witness::VirtualChain { elements, hypotheses } => {
            format!("chain elements {elements:?}, hypotheses {hypotheses:?}")
        }
        Witness::ShatteredSet { points } => format!("shattered set {points:?}"),
    }
}

pub fn extract(g: &Global, a: &ExtractArgs) -> Result<Output> {
    let class = load_class(&a.class)?;
    let eps = need_eps(g, "extract")?;
    let start = match &a.subset {
        Some(ix) => class.hypothesis_set(ix)?,
        None => class.all(),
    };
    let ex = Extractor::with_caps(&class, eps, g.caps(), g.max_subset_size);
    let r: Extraction = match a.mode {
        ExtractMode::Good => ex.extract_good(&start)?,
        ExtractMode::Excellent => ex.extract_excellent(&start)?,
        ExtractMode::Agreeing => ex.extract_agreeing(&start, None)?,
    };
    let verdict = (a.mode == ExtractMode::Excellent).then(|| ex.excellence(&r.set));

    let mut text = format!(
        "input {} hypotheses, output {} {:?}\nsize bound ε^{} · |input|: {}\n",
        r.input.len(),
        r.output.len(),
        r.output,
        r.exponent,
        if r.bound_holds { "holds" } else { "fails" }
    );
    for (i, s) in r.steps.iter().enumerate() {
        let _ = writeln!(
            text,
            "step {i}: {:?} point {:?} kept {:?}, size {} -> {}, ldim {} -> {}",
            s.kind, s.point, s.kept, s.size_before, s.size_after, s.ldim_before, s.ldim_after
        );
    }
    let mut indeterminate = false;
    if let Some(v) = &verdict {
        indeterminate = matches!(v, Excellence::Indeterminate { .. });
        let _ = writeln!(text, "excellence: {}", serde_json::to_string(v)?);
    }
    let mut out = Output::new(json!({"extraction": r, "excellence": verdict}), text)?;
    out.indeterminate = indeterminate;
    Ok(out)
}

fn cover_text(r: &CoverReport) -> String {
    let mut text = format!(
        "family {} experts (round sets up to {}), T = {}, {} trees ({}), {} pairs, {} uncovered\n",
        r.family_size, r.max_round_set, r.horizon, r.trees_checked, r.mode, r.pairs_checked, r.failure_count
    );
    for f in &r.failures {
        let _ = writeln!(text, "  tree {:?} hypothesis {} branch {}", f.tree, f.hypothesis, f.branch);
    }
    text
}

pub fn cover(g: &Global, a: &CoverArgs) -> Result<Output> {
    let class = load_class(&a.class)?;
    let family = ExpertFamily::build(&class, a.horizon, g.tuple_cap)?;
    let source = if a.exhaustive {
        TreeSource::Exhaustive { cap: g.tuple_cap }
    } else if let Some(count) = a.trees {
        TreeSource::Sampled {
            count,
            seed: need_seed(g, "sampling trees")?,
        }
    } else if let Some(seed) = g.seed {
        TreeSource::Auto {
            cap: g.tuple_cap,
            count: AUTO_TREES,
            seed,
        }
    } else {
        TreeSource::Exhaustive { cap: g.tuple_cap }
    };
    let report = verify_cover(&family, &source)?;
    let mut text = cover_text(&report);
    let mutation = if a.mutation {
        let m = mutation_control(&family, &source)?;
        if let (Some(i), Some(set), Some(r)) = (m.removed, &m.round_set, &m.report) {
            let _ = writeln!(text, "without expert {i} (round set {set:?}): {} uncovered", r.failure_count);
        }
        Some(m)
    } else {
        None
    };
    Output::new(json!({"cover": report, "mutation": mutation}), text)
}

/// One sequence per nonempty line, as whitespace-separated `x:y` pairs.
fn read_sequences(path: &Path, domain: usize) -> Result<Vec<Vec<(usize, u8)>>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut seq = Vec::new();
        for (col, tok) in line.split_whitespace().enumerate() {
            let bad = |message: String| Error::Parse {
                line: ln + 1,
                column: col + 1,
                message,
            };
            let (x, y) = tok
                .split_once(':')
                .ok_or_else(|| bad(format!("expected `x:y`, found `{tok}`")))?;
            let x: usize = x.parse().map_err(|_| bad(format!("bad point `{x}`")))?;
            let y: u8 = match y {
                "0" => 0,
                "1" => 1,
                _ => return Err(bad(format!("bad label `{y}`"))),
            };
            if x >= domain {
                return Err(bad(format!("point {x} outside a domain of size {domain}")));
            }
            seq.push((x, y));
        }
        out.push(seq);
    }
    if out.is_empty() {
        return Err(Error::Domain(format!("no sequences in {}", path.display())));
    }
    Ok(out)
}

fn random_sequences(domain: usize, horizon: usize, count: usize, seed: u64) -> Vec<Vec<(usize, u8)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count.max(1))
        .map(|_| (0..horizon).map(|_| (rng.gen_range(0..domain), rng.gen_range(0..2u8))).collect())
        .collect()
}

pub fn duel(g: &Global, a: &DuelArgs) -> Result<Output> {
    let class = load_class(&a.class)?;
    let seed = need_seed(g, "duel")?;
    let (adversary, horizon) = match a.adversary {
        AdversaryKind::Goodtree => {
            let eps = need_eps(g, "the good-tree adversary")?;
            let found = good_tree_depth(&class, eps, &g.caps());
            let tree = match found.witness {
                Some(Witness::Tree { tree }) if tree.depth() > 0 => tree,
                _ => {
                    return Err(Error::Domain(format!(
                        "no ε-good tree of positive depth within depth {}",
                        g.max_depth
                    )))
                }
            };
            let horizon = a.horizon.unwrap_or(tree.depth());
            let config = GoodTreeConfig {
                tree: Arc::new(GoodTree::new(&class, tree, eps)?),
                mode: match a.mode {
                    ModeArg::Adaptive => AdversaryMode::Adaptive,
                    ModeArg::Oblivious => AdversaryMode::Oblivious,
                },
                estimator: match a.estimator {
                    EstimatorArg::Expected => Estimator::Expected,
                    EstimatorArg::Resampled => Estimator::Resampled,
                },
                budget: a.budget,
                exact_cap: g.tuple_cap,
            };
            (AdversarySpec::GoodTree(config), horizon)
        }
        AdversaryKind::Replay => {
            let sequences = match &a.sequences {
                Some(p) => read_sequences(p, class.domain_size())?,
                None => {
                    let horizon = a
                        .horizon
                        .ok_or_else(|| Error::Domain("random replay sequences need --T".into()))?;
                    if class.domain_size() == 0 {
                        return Err(Error::Domain("cannot draw points from an empty domain".into()));
                    }
                    random_sequences(class.domain_size(), horizon, a.trials, seed)
                }
            };
            let horizon = a.horizon.unwrap_or_else(|| sequences.iter().map(Vec::len).min().unwrap_or(0));
            (AdversarySpec::replay(sequences), horizon)
        }
    };
    let learner = match a.learner {
        LearnerKind::Soa => LearnerSpec::soa(&class),
        LearnerKind::Mw => LearnerSpec::mw(ExpertFamily::build(&class, horizon, g.tuple_cap)?),
    };
    let options = GameOptions {
        keep_transcripts: g.emit_witness,
        ..GameOptions::default()
    };
    let report = run_game(&learner, &adversary, horizon, a.trials, seed, &options)?;

    let mut text = format!(
        "{} vs {}, T = {horizon}, {} trials, seed {seed}\n",
        report.learner, report.adversary, report.trials
    );
    let stats = [
        ("mistakes", report.mistakes),
        ("expected mistakes", report.expected_mistakes),
        ("best hypothesis", report.best_hypothesis_mistakes),
        ("best expert", report.best_expert_mistakes),
        ("realizing hypothesis", report.realizing_mistakes),
        ("regret", report.regret),
        ("expected regret", report.expected_regret),
        ("expected regret vs expert", report.expected_regret_vs_expert),
    ];
    for (name, s) in stats {
        if let Some(s) = s {
            let _ = writeln!(text, "{name:<26} mean {:>8.4}  sd {:>8.4}  se {:>8.4}", s.mean, s.sd, s.stderr);
        }
    }
    let csv = report.csv();
    let mut out = Output::new(&report, text)?;
    out.csv = Some(csv);
    Ok(out)
}

pub fn gen(g: &Global, a: &GenArgs) -> Result<Output> {
    let class = generate::generate(&a.kind, &a.params, g.seed)?;
    let body = match &a.output {
        Some(path) => {
            io::store(&class, path)?;
            format!("wrote {} ({} points, {} hypotheses)\n", path.display(), class.domain_size(), class.len())
        }
        None => match g.format {
            OutputFormat::Json => io::to_structured(&class)?,
            _ => io::to_text(&class)?,
        },
    };
    Ok(Output {
        report: json!({"domain_size": class.domain_size(), "hypotheses": class.len()}),
        text: body,
        csv: None,
        indeterminate: false,
    })
}
