use std::fmt;
use std::path::PathBuf;

/// Failures that map to dedicated exit codes.
#[derive(Debug)]
pub enum CliError {
    MissingArtifact { path: PathBuf, hint: String },
    Schema(String),
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::MissingArtifact { .. } => 3,
            Self::Schema(_) => 4,
            Self::Config(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingArtifact { path, hint } => {
                write!(f, "missing artifact {} ({hint})", path.display())
            }
            Self::Schema(m) => write!(f, "schema mismatch: {m}"),
            Self::Config(m) => write!(f, "invalid configuration: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
