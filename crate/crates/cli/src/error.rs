use std::path::PathBuf;

use serde::Serialize;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status when a computation or I/O step fails.
pub const EXIT_COMPUTATION: i32 = 1;
/// Exit status for bad arguments or an unusable config.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{origin}{}: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Parse {
        origin: String,
        line: Option<usize>,
        message: String,
    },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Compute(#[from] biphoton::Error),
}

impl CliError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Invalid { .. } => EXIT_USAGE,
            CliError::Io { .. } | CliError::Compute(_) => EXIT_COMPUTATION,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "config_parse",
            CliError::Invalid { .. } => "config_invalid",
            CliError::Io { .. } => "io",
            CliError::Compute(e) => e.kind(),
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
            #[serde(skip_serializing_if = "Option::is_none")]
            field: Option<&'a str>,
            #[serde(skip_serializing_if = "Option::is_none")]
            line: Option<usize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            missing_settings: Option<&'a [String]>,
        }
        let (field, line, missing) = match self {
            CliError::Invalid { field, .. } => (Some(field.as_str()), None, None),
            CliError::Parse { line, .. } => (None, *line, None),
            CliError::Compute(biphoton::Error::RankDeficient { missing }) => (None, None, Some(missing.as_slice())),
            _ => (None, None, None),
        };
        serde_json::to_string(&Record {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
            field,
            line,
            missing_settings: missing,
        })
        .expect("error record serializes")
    }
}
