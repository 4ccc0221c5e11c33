use std::fmt;

/// Command failure carrying its process exit code.
///
/// The codes are a stable contract: 1 configuration or hypothesis
/// violation, 2 divergence, 3 no Hopf crossing, 4 verification failure.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Divergence(String),
    NoCrossing(String),
    Verification(Vec<String>),
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Divergence(_) => 2,
            CliError::NoCrossing(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Divergence(m) => write!(f, "integration diverged: {m}"),
            CliError::NoCrossing(m) => write!(f, "no Hopf crossing: {m}"),
            CliError::Verification(failed) => write!(f, "verification failed: {}", failed.join(", ")),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub(crate) fn write_file(path: &std::path::Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
