use std::fmt;
use std::path::Path;

use spinthermo_core::Error;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_TRIPWIRE: u8 = 3;
pub const EXIT_GATED: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(EXIT_VALIDATION, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(EXIT_FAILURE, message)
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_FAILURE, format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidSpectrum(_)
            | Error::Domain(_)
            | Error::Size(_)
            | Error::InvalidModel(_)
            | Error::Json(_) => EXIT_VALIDATION,
            Error::NonFinite { .. } => EXIT_TRIPWIRE,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}
