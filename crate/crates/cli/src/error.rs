use std::fmt;

use eip_core::Error;

/// Failure reported as one `error[<kind>]: <message>` line.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>, exit_code: i32) -> Self {
        Self {
            kind,
            message: message.into(),
            exit_code,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message, 2)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message, 1)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new("io", message, 1)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}]: {msg}", self.kind)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Io { .. } | Error::Serde(_) | Error::Image(_) => "io",
            Error::MeshParse { .. }
            | Error::EmptyMesh
            | Error::EmptyInterior { .. }
            | Error::NotWatertight { .. } => "mesh",
            Error::InvalidParameter(_) | Error::PoissonOutOfRange(_) | Error::Cfl { .. } => "config",
            Error::OutOfGrid { .. } | Error::Singular(_) | Error::NonFinite { .. } => "solver",
            Error::FrameFormat(_) => "format",
        };
        Self::new(kind, e.to_string(), 1)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::io(e.to_string())
    }
}
