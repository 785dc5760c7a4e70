use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library error type. Every variant maps to a stable numeric code so the
/// CLI exit status and the C ABI can report the same taxonomy.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),

    #[error("{0}")]
    Size(String),

    #[error("expected a {expected} series, got {got}")]
    Kind {
        expected: &'static str,
        got: &'static str,
    },

    #[error("cumulant order {0} unsupported, only 2..=4 are implemented")]
    UnsupportedOrder(u32),

    #[error("insufficient data for {what}: need {needed}, have {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("no crossover: prefactor {c_small} does not exceed {c_large}")]
    NoCrossover { c_small: f64, c_large: f64 },

    #[error("hurst exponents out of order: {h1} must be < {h2}")]
    Ordering { h1: f64, h2: f64 },

    #[error("circulant embedding eigenvalue {eigenvalue} at index {index} is negative beyond tolerance (max eigenvalue {max})")]
    Embedding {
        index: usize,
        eigenvalue: f64,
        max: f64,
    },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("non-uniform timestamp spacing at line {line}: expected step {expected}, got {got}")]
    Spacing {
        line: usize,
        expected: f64,
        got: f64,
    },

    #[error("input contains no data rows")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable numeric code, also used as the CLI exit status.
    pub fn code(&self) -> i32 {
        match self {
            Error::Domain(_) => 2,
            Error::Size(_) => 3,
            Error::Kind { .. } => 4,
            Error::UnsupportedOrder(_) => 5,
            Error::InsufficientData { .. } => 6,
            Error::NoCrossover { .. } => 7,
            Error::Ordering { .. } => 8,
            Error::Embedding { .. } => 9,
            Error::Parse { .. } => 10,
            Error::Spacing { .. } => 11,
            Error::EmptyInput => 12,
            Error::Config(_) => 13,
            Error::Io(_) => 14,
        }
    }

    /// Short machine-parsable tag for the CLI's one-line diagnostics.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Size(_) => "size",
            Error::Kind { .. } => "kind",
            Error::UnsupportedOrder(_) => "unsupported-order",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::NoCrossover { .. } => "no-crossover",
            Error::Ordering { .. } => "ordering",
            Error::Embedding { .. } => "synthesis",
            Error::Parse { .. } => "parse",
            Error::Spacing { .. } => "spacing",
            Error::EmptyInput => "empty-input",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
