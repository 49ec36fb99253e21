use thiserror::Error;

use crate::agents::AgentError;
use crate::event::EventError;
use crate::gcm::GcmError;
use crate::implicature::ImplicatureError;
use crate::info::InfoError;
use crate::logic::LogicError;
use crate::net::NetError;

/// Any error raised by the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Gcm(#[from] GcmError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Implicature(#[from] ImplicatureError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}
