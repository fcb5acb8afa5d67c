//! Review service for placeholder suggestions.
//!
//! A [`ReviewSession`] regenerates suggestions for a corpus, replays the
//! decisions log over them, and records new decisions write-ahead. The
//! [`api`] module serves the session over HTTP.

pub mod api;
pub mod log;
pub mod session;

use thiserror::Error;

pub use api::{router, serve, SharedSession};
pub use log::{DecisionLog, LogSink};
pub use session::{
    corpus_suggestions, replay, ExportReport, Progress, ReviewSession, SessionConfig, StartReport, SuggestionFilter,
    SuggestionPage,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("decisions log line {line} is corrupt: {message}")]
    CorruptLog { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("unknown id `{0}`")]
    NotFound(String),
    #[error("{0}")]
    Validation(String),
    #[error("could not write decisions log: {0}")]
    LogWrite(String),
}

/// Starts a session: builds suggestions, then replays the log.
pub fn start_session(config: SessionConfig) -> Result<(ReviewSession, StartReport), SessionError> {
    ReviewSession::start(config)
}
