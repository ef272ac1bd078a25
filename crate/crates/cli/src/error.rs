use thiserror::Error;

/// Exit codes, stable across releases.
pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (bad or conflicting flags)
  3  invalid argument rejected by the engine (e.g. block budget too small)
  4  input data error (size mismatch, non-finite samples)
  5  graph document error (parse or version)
  6  I/O error
  7  internal invariant violated";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Engine(#[from] exgraph::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn code(&self) -> u8 {
        use exgraph::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Engine(e) => match e {
                E::InvalidArgument(_) => 3,
                E::SizeMismatch { .. } | E::Format(_) => 4,
                E::Parse { .. } | E::Version { .. } => 5,
                E::Io { .. } => 6,
                E::Internal(_) => 7,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
