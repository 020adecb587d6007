//! Batch CLI plumbing for the battkit toolkit: CSV ingestion and emission,
//! the JSON simulation config schema, and the subcommand implementations.
//!
//! Exit-code contract: 0 success (including a "no crossing" answer),
//! 1 usage error, 2 input-data or I/O error, 3 numerical error
//! (rank-deficient fit). Errors go to stderr, results to stdout.

use std::fmt;

pub mod cmd;
pub mod config;
pub mod csvio;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values; exit 1.
    Usage(String),
    /// Unreadable, malformed, or schema-violating input data; exit 2.
    Data(String),
    /// A numerically unsolvable problem, e.g. a rank-deficient fit; exit 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) | CliError::Numerical(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl std::error::Error for CliError {}

/// Maps a core error raised while processing input *data*: rank deficiency
/// is a numerical failure, everything else is bad data.
pub(crate) fn data_error(err: battkit::Error) -> CliError {
    match err {
        battkit::Error::RankDeficient(_) => CliError::Numerical(err.to_string()),
        _ => CliError::Data(err.to_string()),
    }
}

/// Maps a core error raised while validating flag values.
pub(crate) fn usage_error(err: battkit::Error) -> CliError {
    CliError::Usage(err.to_string())
}
