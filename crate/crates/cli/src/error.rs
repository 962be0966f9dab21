use std::fmt;

use figharvest_core::catalog::CatalogError;
use figharvest_core::curate::CurateError;
use figharvest_core::detect::DetectError;
use figharvest_core::eval::EvalError;
use figharvest_core::labels::RecordError;
use figharvest_core::synth::SynthError;

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or invalid input data: exit 1.
    Validation(String),
    /// A file or socket could not be read or written: exit 2.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    pub fn io(path: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{path}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

macro_rules! classify {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                if e.is_io() {
                    CliError::Io(e.to_string())
                } else {
                    CliError::Validation(e.to_string())
                }
            }
        }
    )*};
}

classify!(SynthError, DetectError, RecordError, CatalogError, CurateError);

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
