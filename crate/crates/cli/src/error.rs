use std::fmt;

use serde::Serialize;

/// Failure category, which also fixes the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed or inconsistent experiment configuration.
    Config,
    /// Unreadable, malformed or mismatched data files.
    Data,
    /// The solver itself failed.
    Solver,
    /// A comparison fell outside the requested tolerances.
    Tolerance,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Tolerance => 1,
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Solver => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Data,
            message: message.into(),
        }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Solver,
            message: message.into(),
        }
    }

    pub fn tolerance(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Tolerance,
            message: message.into(),
        }
    }

    /// Classifies a library error raised while running a solver. Configuration
    /// problems the library detects keep their own category.
    pub fn from_solver(err: cslr_core::Error) -> Self {
        match err {
            cslr_core::Error::Config(m) => Self::config(m),
            other => Self::solver(other.to_string()),
        }
    }

    /// Machine-readable form written to stderr on failure.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: ErrorKind,
            exit_code: i32,
            message: &'a str,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Wrapper {
            error: Body {
                kind: self.kind,
                exit_code: self.kind.exit_code(),
                message: &self.message,
            },
        })
        .expect("error report serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} error: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}
