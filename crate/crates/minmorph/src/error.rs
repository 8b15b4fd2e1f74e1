use std::io;

use minmorph_core::Error as CoreError;

/// Everything the driver can fail with. [`CliError::exit_code`] maps each to
/// the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    /// Bad flags or arguments.
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
}

/// Success.
pub const EXIT_OK: u8 = 0;
/// Invalid input, bad arguments, or a failed check.
pub const EXIT_VALIDATION: u8 = 1;
/// An iterative solver did not converge.
pub const EXIT_CONVERGENCE: u8 = 2;
/// Reading, writing or parsing failed.
pub const EXIT_IO: u8 = 3;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } => EXIT_IO,
            CliError::Config(_) => EXIT_VALIDATION,
            CliError::Core { source, .. } if source.is_convergence_failure() => EXIT_CONVERGENCE,
            CliError::Core { .. } => EXIT_VALIDATION,
        }
    }

    pub(crate) fn core(context: impl Into<String>) -> impl FnOnce(CoreError) -> Self {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let io = CliError::Io { path: "x".into(), source: io::Error::other("boom") };
        assert_eq!(io.exit_code(), EXIT_IO);
        let parse = CliError::Parse { path: "x".into(), line: 3, message: "bad".into() };
        assert_eq!(parse.exit_code(), EXIT_IO);
        assert_eq!(parse.to_string(), "x:3: bad");
        assert_eq!(CliError::Config("no".into()).exit_code(), EXIT_VALIDATION);
        let stalled = CoreError::Frame {
            index: 4,
            source: Box::new(CoreError::Stagnation { residual: 0.1, iterations: 3 }),
        };
        assert_eq!(CliError::core("solve")(stalled).exit_code(), EXIT_CONVERGENCE);
        assert_eq!(
            CliError::core("load")(CoreError::DegenerateSimplex { simplex: 2 }).exit_code(),
            EXIT_VALIDATION
        );
    }
}
