//! Executable model of inferential communication.
//!
//! The crate is organised bottom-up:
//!
//! * [`event`] timed events, chains, contexts and traces.
//! * [`gcm`] the general cognitive module: a gated fast transfer pathway and a
//!   slow metabolic pathway that rewrites it.
//! * [`net`] networks of modules, circularity detection, stratification and
//!   predicates with crisp/fuzzy membership.
//! * [`implicature`] causal implicature by surprisal minimisation over a
//!   pseudo-complemented meet-semilattice of candidate contexts.
//! * [`info`] entropy, possibility projection, time-varying entropy and a
//!   windowed stationarity test.
//! * [`logic`] parser, stratification and legality checks for a first-order
//!   language with standardness modifiers, plus finite-model evaluation.
//! * [`agents`] reference instantiations: matched-filter receiver, behaviour
//!   tree character, bandit learner and the roadside dialogue scenario.

pub mod agents;
pub mod event;
pub mod gcm;
pub mod implicature;
pub mod info;
pub mod logic;
pub mod net;
pub mod rng;

mod error;

pub use error::Error;
pub use event::{Chain, ContextPolicy, Event, Trace};
pub use gcm::{Gcm, MetabolicFn, Ports, Signal, SignalBundle, TransferFn};
pub use implicature::{CandidatePair, ConditionalModel, ImplicatureLattice};
pub use info::{PossibilitySet, SymbolDistribution};
pub use logic::{Formula, Term};
pub use net::{Network, Predicate};

/// Version string embedded in CLI summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
