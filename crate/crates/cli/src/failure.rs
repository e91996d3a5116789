use std::fmt;
use std::path::Path;

/// A command failure, classified for the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// Caused by unreadable or malformed input or configuration.
    pub input: bool,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            input: true,
            message: message.into(),
        }
    }

    pub fn compute(message: impl Into<String>) -> Self {
        Failure {
            input: false,
            message: message.into(),
        }
    }

    /// Prefixes the message with the sample it concerns, unless the path
    /// is already there.
    pub fn about(mut self, path: &Path) -> Self {
        let p = path.display().to_string();
        if !self.message.contains(&p) {
            self.message = format!("{p}: {}", self.message);
        }
        self
    }

    pub fn exit_code(&self) -> u8 {
        if self.input {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<heatmetrics::Error> for Failure {
    fn from(e: heatmetrics::Error) -> Self {
        Failure {
            input: e.is_input_error(),
            message: e.to_string(),
        }
    }
}

/// Several independent failures, reported together.
#[derive(Debug, Default)]
pub struct Failures(pub Vec<Failure>);

impl Failures {
    pub fn exit_code(&self) -> u8 {
        self.0.iter().map(Failure::exit_code).max().unwrap_or(0)
    }
}

impl From<Failure> for Failures {
    fn from(f: Failure) -> Self {
        Failures(vec![f])
    }
}

impl From<heatmetrics::Error> for Failures {
    fn from(e: heatmetrics::Error) -> Self {
        Failures(vec![e.into()])
    }
}
