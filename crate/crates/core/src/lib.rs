//! Sparse distributed associative memory.
//!
//! A coding field of `q` winner-take-all clusters with `k` binary units each
//! stores every item as a *code*: one winning unit per cluster. Because codes
//! overlap, the single active code also expresses a graded strength for every
//! other stored code (its intersection size), so one fully active code acts
//! both as a specific state and as a distribution over all stored states.
//!
//! Storage and best-match retrieval touch a fixed number of weights that
//! depends only on the field geometry and the input, never on how many items
//! are stored. [`bench`] measures this with exact operation counters and
//! compares it against the localist reference in [`oracle`].

pub mod bench;
pub mod coding_field;
pub mod cost;
pub mod error;
pub mod exec;
pub mod memory;
pub mod oracle;
pub mod pattern;
mod persist;
pub mod rng;

pub use coding_field::{Code, FieldGeometry, Likelihood};
pub use cost::CostReport;
pub use error::{Error, Result};
pub use exec::Exec;
pub use memory::{Activation, Learned, Memory, ModelParams, Recall, SelectMode};
pub use oracle::{evolve_explicit, ExplicitSuperposition, Registry, TransitionTable};
pub use pattern::BitPattern;
pub use rng::SdrRng;
