use thiserror::Error;

/// Failure of a subcommand, split by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config or bad input files (exit 2).
    #[error("{0}")]
    Usage(String),
    /// The work itself failed (exit 1).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<stomads_core::Error> for CliError {
    fn from(e: stomads_core::Error) -> Self {
        use stomads_core::Error as E;
        match e {
            E::InvalidConfig(_)
            | E::DimensionMismatch { .. }
            | E::NonFinite { .. }
            | E::OutOfBounds
            | E::MissingReference(_)
            | E::UnknownProblem(_)
            | E::Parse { .. }
            | E::Expression(_)
            | E::Schema(_) => CliError::Usage(e.to_string()),
            E::Budget(_) | E::Record(_) | E::Io(_) | E::Json(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(stomads_core::Error::Schema("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(stomads_core::Error::UnknownProblem("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(stomads_core::Error::Record("x".into())).exit_code(), 1);
    }
}
