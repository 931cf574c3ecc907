use std::fmt;

/// Everything the front end can fail with.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Io(String),
    OracleCheckFailed { deviation: f64, fidelity: f64 },
    Core(slaterflo::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "ParseError",
            CliError::Io(_) => "IoError",
            CliError::OracleCheckFailed { .. } => "OracleCheckFailed",
            CliError::Core(e) => e.kind(),
        }
    }

    /// 0 ok, 1 parse/config, 2 unsupported parity, 3 numerical check, 4 term cap.
    pub fn exit_code(&self) -> i32 {
        use slaterflo::Error as E;
        match self {
            CliError::OracleCheckFailed { .. } => 3,
            CliError::Core(E::ParityGroupingUnsupported { .. }) => 2,
            CliError::Core(E::NoAdmissibleBranch { .. }) => 3,
            CliError::Core(E::TermCapExceeded { .. }) => 4,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Io(m) => f.write_str(m),
            CliError::OracleCheckFailed { deviation, fidelity } => write!(
                f,
                "oracle check failed (max probability deviation {deviation:e}, min fidelity {fidelity})"
            ),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<slaterflo::Error> for CliError {
    fn from(e: slaterflo::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
