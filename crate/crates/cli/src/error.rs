use serde_json::json;
use superefficiency::Error;

/// A failed run, mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    Config { key: Option<String>, message: String },
    Width(String),
    NoSuperefficientPoint(String),
    AssumptionViolation(String),
    Io(String),
}

impl CliError {
    pub fn config(key: Option<&str>, message: impl Into<String>) -> Self {
        CliError::Config { key: key.map(str::to_string), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Width(_) => 3,
            CliError::NoSuperefficientPoint(_) => 4,
            CliError::AssumptionViolation(_) => 5,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "invalid_config",
            CliError::Width(_) => "width_error",
            CliError::NoSuperefficientPoint(_) => "no_superefficient_point",
            CliError::AssumptionViolation(_) => "assumption_violation",
            CliError::Io(_) => "io_error",
        }
    }

    /// Single-line JSON error object.
    pub fn to_json(&self) -> String {
        let (key, message) = match self {
            CliError::Config { key, message } => (key.clone(), message.clone()),
            CliError::Width(m)
            | CliError::NoSuperefficientPoint(m)
            | CliError::AssumptionViolation(m)
            | CliError::Io(m) => (None, m.clone()),
        };
        json!({ "error": self.kind(), "exit_code": self.exit_code(), "key": key, "message": message }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Width { .. } => CliError::Width(e.to_string()),
            Error::AssumptionViolation(_) => CliError::AssumptionViolation(e.to_string()),
            other => CliError::config(None, other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
