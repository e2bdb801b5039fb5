//! Finite hypothesis classes and the combinatorics of online learning on
//! them: Littlestone, VC and threshold dimensions with their approximate and
//! virtual variants, ε-good and ε-excellent extraction, the adaptive expert
//! cover, and a harness for the learner/adversary game.

pub mod bits;
pub mod class;
pub mod dims;
pub mod epsilon;
pub mod error;
pub mod experts;
pub mod game;
pub mod generate;
pub mod io;
pub mod majority;
pub mod par;

pub use bits::{BitSet, HypSet, PointSet};
pub use class::{BooleanCombiner, HypothesisClass, PartialLabeling};
pub use epsilon::Epsilon;
pub use error::{Error, Result};
