use std::fmt;
use std::process::ExitCode;

use dbacf::DbacfError;

/// Diagnostic class of a failed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Code {
    /// Bad or missing flags, malformed config.
    Args,
    /// Unreadable input, unwritable output, unparsable file content.
    Io,
    /// Input outside an operation's domain.
    Domain,
    /// Numerical failure or non-convergence.
    Numeric,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Args => "E_ARGS",
            Code::Io => "E_IO",
            Code::Domain => "E_DOMAIN",
            Code::Numeric => "E_NUMERIC",
        }
    }

    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Code::Io => 2,
            Code::Args | Code::Domain | Code::Numeric => 3,
        })
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn args(message: impl Into<String>) -> Self {
        Self::new(Code::Args, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(Code::Io, message)
    }

    /// One JSON line for stderr.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({ "schema": 1, "error": self.code.as_str(), "message": self.message })
            .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl From<DbacfError> for CliError {
    fn from(e: DbacfError) -> Self {
        let code = match e {
            DbacfError::Domain(_) | DbacfError::Invalid(_) => Code::Domain,
            DbacfError::Numeric(_) | DbacfError::Convergence { .. } => Code::Numeric,
        };
        Self::new(code, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_codes() {
        let c = |e: DbacfError| CliError::from(e).code;
        assert_eq!(c(DbacfError::Domain("x".into())), Code::Domain);
        assert_eq!(c(DbacfError::Invalid("x".into())), Code::Domain);
        assert_eq!(c(DbacfError::Numeric("x".into())), Code::Numeric);
        assert_eq!(c(DbacfError::Convergence { iterations: 3, residual: 1.0 }), Code::Numeric);
    }

    #[test]
    fn diagnostic_is_one_json_line() {
        let d = CliError::args("missing --m\nsecond line").diagnostic();
        assert!(!d.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&d).unwrap();
        assert_eq!(v["error"], "E_ARGS");
        assert_eq!(v["schema"], 1);
    }
}
