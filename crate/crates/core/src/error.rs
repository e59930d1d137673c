use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data, configuration, or parameters.
    Validation,
    /// A numerical procedure failed (instability, no crossover, infeasible design).
    Numeric,
}

/// One rejected row of an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct RowProblem {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid bounding box [{x1}, {y1}, {x2}, {y2}]: {reason}")]
    InvalidBox {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        reason: &'static str,
    },
    #[error("degenerate IoU: both boxes have zero area")]
    DegenerateIou,
    #[error("image id mismatch: ground truth `{ground_truth}` vs detection `{detection}`")]
    ImageMismatch {
        ground_truth: String,
        detection: String,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("frequency must be positive, got {0} rad/s")]
    NonPositiveFrequency(f64),
    #[error("infeasible lead compensation: {0}")]
    InfeasibleLead(String),
    #[error("no gain crossover in [{lo}, {hi}] rad/s")]
    NoCrossover { lo: f64, hi: f64 },
    #[error("closed loop is unstable: {0}")]
    Unstable(String),
    #[error("simulation diverged at t = {t} s (|y| = {magnitude})")]
    Diverged { t: f64, magnitude: f64 },
    #[error("sample length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sample: {0}")]
    EmptySample(String),
    #[error("budget table has no rows")]
    EmptyTable,
    #[error("{}: {} problem(s)\n{}", path.display(), problems.len(), join_problems(problems))]
    Ingest {
        path: PathBuf,
        problems: Vec<RowProblem>,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn join_problems(problems: &[RowProblem]) -> String {
    problems
        .iter()
        .map(|p| format!("  {p}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InfeasibleLead(_)
            | Error::NoCrossover { .. }
            | Error::Unstable(_)
            | Error::Diverged { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}
