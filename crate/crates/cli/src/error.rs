use futaki_core::error::Error;
use thiserror::Error as ThisError;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug, ThisError)]
pub enum CliError {
    /// Bad input, configuration, or missing prerequisite.
    #[error("{0}")]
    Input(String),
    /// A numerical routine gave up.
    #[error("{0}")]
    Numerical(String),
    /// A verification or calibration check did not pass.
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::CalibrationAmbiguous(_) | Error::CalibrationFailed(_) => CliError::Verification(msg),
            Error::FrameSearchExhausted(_) | Error::TooManyRejections { .. } => CliError::Numerical(msg),
            ref e if e.is_sample_rejection() => CliError::Numerical(msg),
            _ => CliError::Input(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
