use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    NoSolution(String),
    Io(String),
    Compute(xychain::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoSolution(_) => 3,
            CliError::Io(_) => 4,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::NoSolution(m) => write!(f, "no solution: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<xychain::Error> for CliError {
    fn from(e: xychain::Error) -> Self {
        use xychain::Error as E;
        match e {
            E::InvalidConfig(_) | E::UnknownParameter(_) | E::Capacity { .. } => {
                CliError::Config(e.to_string())
            }
            E::NoSolution { .. } | E::EmptySolutions => CliError::NoSolution(e.to_string()),
            E::Io(m) => CliError::Io(m),
            other => CliError::Compute(other),
        }
    }
}
