use thiserror::Error;

/// Errors raised by the auditing library.
///
/// Variants are grouped so that front ends can map them onto stable exit
/// codes: [`AuditError::kind`] reports the group.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{name} out of domain: {value}")]
    Domain { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("degenerate samples: {0}")]
    Degenerate(String),

    #[error("log-likelihood ratio {value:.4} exceeds grid half-width L={half_width}; rerun with a larger L")]
    GridOverflow { value: f64, half_width: f64 },

    #[error("grid of {nodes} nodes exceeds the cap of {cap} nodes")]
    GridTooLarge { nodes: usize, cap: usize },

    #[error("target {target} outside attainable range [{lo}, {hi}]")]
    Bracket { target: f64, lo: f64, hi: f64 },

    #[error("profile cannot be inverted: {0}")]
    NotInvertible(String),

    #[error("profile is not monotone: {0}")]
    NotMonotone(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

/// Coarse classification of [`AuditError`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters or configuration supplied by the caller.
    Config,
    /// Malformed or inconsistent input data.
    Input,
    /// A numeric grid is too small or too large.
    Grid,
    /// A fit or inversion did not converge to a usable answer.
    Fit,
}

impl AuditError {
    pub fn kind(&self) -> ErrorKind {
        use AuditError::*;
        match self {
            Domain { .. } | InvalidArgument(_) | IndexOutOfRange { .. } => ErrorKind::Config,
            DimensionMismatch { .. }
            | InvalidDistribution(_)
            | Empty(_)
            | Degenerate(_)
            | Parse { .. }
            | Io(_) => ErrorKind::Input,
            GridOverflow { .. } | GridTooLarge { .. } => ErrorKind::Grid,
            Bracket { .. } | NotInvertible(_) | NotMonotone(_) | FitFailure(_) => ErrorKind::Fit,
        }
    }
}

impl From<std::io::Error> for AuditError {
    fn from(e: std::io::Error) -> Self {
        AuditError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AuditError>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(AuditError::Domain { name, value })
    }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(AuditError::Domain { name, value })
    }
}

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(AuditError::Domain { name, value })
    }
}
