//! Votes, ε-good and ε-excellent sets, and the extraction recursions.

mod extract;
mod largeness;
mod purify;
mod vote;

pub use extract::{
    extract_agreeing, extract_excellent, extract_good, is_excellent_subset, is_opinionated,
    Excellence, Excellent, Extraction, Extractor, GoodProperty, Goodness, Step, StepKind,
};
pub use largeness::{
    check_axioms, largeness_conditions_hold, ldim_largeness, AxiomReport, AxiomResult,
    HalfLargeness, LargenessRelation, LdimLargeness,
};
pub use purify::{purify_halfgraph, purify_target, Purified};
pub use vote::{
    find_violator, first_splitting_point, is_good_dist, is_good_hypotheses, is_good_subset, vote,
    vote_column, vote_with, Distribution, Polarity, Vote,
};
