//! Reference agents built only from [`crate::gcm`] and [`crate::net`] types.
//!
//! * [`receiver`] a matched-filter symbol receiver whose state nodes are
//!   vetoed by the transition graph.
//! * [`character`] a behaviour tree compiled into a rule table, with an
//!   animation state machine expressed as inhibitory mask lines.
//! * [`bandit`] a multi-armed bandit learned through the gated slow pathway.
//! * [`scenarios`] the roadside dialogue, a context-switch trace and the
//!   shipped example configurations.
//!
//! Where an agent needs its own previous output (last decoded symbol,
//! current pose) the driver feeds it back as an external input one tick
//! later; the networks themselves stay acyclic.

pub mod bandit;
pub mod character;
pub mod receiver;
pub mod scenarios;

use thiserror::Error;

use crate::event::EventError;
use crate::gcm::{GcmError, PortKind};
use crate::net::{Edge, NetError};

pub use bandit::{build_bandit, run_bandit, BanditConfig, BanditRun, GateSchedule};
pub use character::{build_character, BehaviourSpec, BtNode, Character, CharacterConfig, PoseFrame};
pub use receiver::{
    ber_curve, bpsk_config, bpsk_theoretical_ber, build_receiver, q_function, BerPoint, Receiver,
    ReceiverConfig, ReceiverRun,
};
pub use scenarios::{context_switch_scenario, garage_scenario, iid_trace};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gcm(#[from] GcmError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Event(#[from] EventError),
}

pub type Result<T> = std::result::Result<T, AgentError>;

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(AgentError::Config(msg.into()))
}

fn edge(from: &str, to: &str, kind: PortKind) -> Edge {
    Edge {
        from: from.into(),
        to: to.into(),
        kind,
    }
}
