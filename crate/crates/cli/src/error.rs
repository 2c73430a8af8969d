use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("malformed table: {0}")]
    Table(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Config { path: PathBuf, source: serde_json::Error },

    #[error(transparent)]
    Numerical(#[from] ddgr::Error),

    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 1 verification failure, 2 usage or configuration, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        use ddgr::Error as E;
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Table(_) | CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Numerical(e) => match e {
                E::AtLambda { source, .. } => CliError::Numerical((**source).clone()).exit_code(),
                E::SingularBand { .. }
                | E::NearSingular { .. }
                | E::ZeroCrossing { .. }
                | E::CoincidentParameters(_)
                | E::DegenerateTriple(_)
                | E::InvalidGrid(_)
                | E::InvalidArgument(_)
                | E::Wavenumber(_)
                | E::NotShortRange { .. }
                | E::EnergyNotBelowGround { .. }
                | E::LevelCount { .. } => 2,
                _ => 3,
            },
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
