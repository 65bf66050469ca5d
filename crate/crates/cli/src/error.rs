use std::fmt;

use wavefront_core::Error as CoreError;

/// Bad user input: arguments, parameters or input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError(String);

impl ValidationError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

/// 2 for invalid input, 1 for anything that went wrong while running.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ValidationError>() {
            return EXIT_VALIDATION;
        }
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Domain(_)
                | CoreError::Shape { .. }
                | CoreError::GridSide(_)
                | CoreError::Config(_) => EXIT_VALIDATION,
                _ => EXIT_RUNTIME,
            };
        }
    }
    EXIT_RUNTIME
}
