use std::fmt;

/// Which exit code a failure maps to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Bad config, bad input files, failed validation: exit 1.
    Validation,
    /// Numerical or runtime failure: exit 2.
    Runtime,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: Kind::Validation, error: e.into() }
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: Kind::Runtime, error: e.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Validation => 1,
            Kind::Runtime => 2,
        }
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self { kind: self.kind, error: self.error.context(msg) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<fedheat_core::Error> for CliError {
    fn from(e: fedheat_core::Error) -> Self {
        use fedheat_core::Error as E;
        match e {
            E::InvalidInput(_)
            | E::Shape(_)
            | E::InvalidConfig(_)
            | E::Certification { .. }
            | E::AlignmentUnsupported(_)
            | E::InvalidBudget(_) => Self::validation(e),
            E::Aggregation(_) | E::ProtocolAbort(_) | E::Undefined(_) | E::Numerical(_) => Self::runtime(e),
        }
    }
}

/// Shorthand for wrapping foreign errors with a kind.
pub trait OrKind<T> {
    fn or_validation(self, msg: &str) -> CliResult<T>;
    fn or_runtime(self, msg: &str) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrKind<T> for Result<T, E> {
    fn or_validation(self, msg: &str) -> CliResult<T> {
        self.map_err(|e| CliError::validation(e.into().context(msg.to_owned())))
    }

    fn or_runtime(self, msg: &str) -> CliResult<T> {
        self.map_err(|e| CliError::runtime(e.into().context(msg.to_owned())))
    }
}
