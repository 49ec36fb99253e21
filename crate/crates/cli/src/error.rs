use std::path::Path;

use matic_core::agents::AgentError;
use matic_core::Error as CoreError;
use thiserror::Error;

/// Failure categories, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, missing or malformed configuration. Exit 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data that cannot be analysed. Exit 3.
    #[error("data error: {0}")]
    Data(String),
    /// Anything else, including failure to write artifacts. Exit 4.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Internal(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Gcm(_) | CoreError::Net(_) => CliError::Config(e.to_string()),
            CoreError::Agent(AgentError::Config(_)) => CliError::Config(e.to_string()),
            CoreError::Agent(_) => CliError::Internal(e.to_string()),
            CoreError::Event(_)
            | CoreError::Implicature(_)
            | CoreError::Info(_)
            | CoreError::Logic(_) => CliError::Data(e.to_string()),
        }
    }
}

macro_rules! core_errors {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CoreError::from(e).into()
            }
        })*
    };
}

core_errors!(
    matic_core::event::EventError,
    matic_core::gcm::GcmError,
    matic_core::net::NetError,
    matic_core::implicature::ImplicatureError,
    matic_core::info::InfoError,
    matic_core::logic::LogicError,
    AgentError
);

pub type Result<T> = std::result::Result<T, CliError>;
