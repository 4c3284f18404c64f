//! Library side of the command-line tool: the deterministic experiment
//! harness, table formatting, and the exit-code policy.
//!
//! Exit codes: 0 success (including not-found outcomes, which are data),
//! 1 no-solution from the bound optimizer, 2 usage, 3 parameter, 4 I/O.

pub mod experiment;
pub mod tables;

use shortdlp::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parameter(String),
    Io(String),
    NoSolution(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NoSolution(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Parameter(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parameter(m) => write!(f, "parameter error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::NoSolution(m) => write!(f, "no solution: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse(m) => CliError::Io(format!("parse: {m}")),
            other => CliError::Parameter(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Accepts plain floats ("0.99") and complement notation ("1-1e-10").
pub fn parse_target(s: &str) -> Result<f64, CliError> {
    let v = if let Some(rest) = s.strip_prefix("1-") {
        let eps: f64 = rest
            .parse()
            .map_err(|_| CliError::Usage(format!("bad target {s:?}")))?;
        1.0 - eps
    } else {
        s.parse()
            .map_err(|_| CliError::Usage(format!("bad target {s:?}")))?
    };
    if !(v > 0.0 && v < 1.0) {
        return Err(CliError::Usage(format!(
            "target must lie strictly between 0 and 1, got {s:?}"
        )));
    }
    Ok(v)
}

/// "22.1" from tenths = 221.
pub fn tenths_str(tenths: i64) -> String {
    format!("{}.{}", tenths / 10, tenths % 10)
}
