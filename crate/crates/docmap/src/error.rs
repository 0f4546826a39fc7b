//! Crate-wide error type with a stable mapping to process exit codes.

use std::path::Path;

/// All failures surfaced by the library.
///
/// Exit-code contract (used by the CLI): validation errors → 2,
/// I/O / parse / HTTP errors → 3, numeric failures → 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Precondition or configuration violation (bad arguments, out-of-range
    /// values, contract misuse, empty inputs where data is required).
    #[error("invalid input: {0}")]
    Validation(String),

    /// Filesystem failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file contents (JSONL, .vec, XML, TSV, CSV). The message
    /// carries the location (line number or byte offset) when known.
    #[error("parse error: {0}")]
    Parse(String),

    /// HTTP transport failure after retries were exhausted.
    #[error("http error: {0}")]
    Http(String),

    /// Numeric failure: divergence (NaN/∞ detected) or degenerate data that
    /// makes the requested computation meaningless.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Build an [`Error::Io`] carrying the offending path.
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Wrap this error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Io { .. } | Error::Parse(_) | Error::Http(_) => 3,
            Error::Numeric(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_documented_mapping() {
        assert_eq!(Error::Validation("x".into()).exit_code(), 2);
        assert_eq!(
            Error::io(Path::new("/nope"), std::io::Error::from(std::io::ErrorKind::NotFound))
                .exit_code(),
            3
        );
        assert_eq!(Error::Parse("x".into()).exit_code(), 3);
        assert_eq!(Error::Http("x".into()).exit_code(), 3);
        assert_eq!(Error::Numeric("x".into()).exit_code(), 4);
    }

    #[test]
    fn stage_wrapper_delegates_exit_code_and_names_the_stage() {
        let err = Error::Numeric("NaN at iteration 50".into()).in_stage("projection");
        assert_eq!(err.exit_code(), 4);
        let msg = err.to_string();
        assert!(msg.contains("projection"), "missing stage name: {msg}");
    }
}
