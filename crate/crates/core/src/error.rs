use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient history in `{series}`: need {needed} observations, have {available}")]
    InsufficientHistory {
        series: String,
        needed: usize,
        available: usize,
    },

    #[error("domain error in `{series}` at {date}: {reason}")]
    Domain {
        series: String,
        date: NaiveDate,
        reason: String,
    },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("no overlapping dates: `{series}` shares no dates with the rest of the panel")]
    InsufficientOverlap { series: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate option chain: computed variance {variance} is negative")]
    DegenerateChain { variance: f64 },

    #[error("internal consistency check failed for {what}: discrepancy {discrepancy:e}")]
    Consistency { what: String, discrepancy: f64 },

    #[error("singular design: columns {columns:?} are collinear")]
    SingularDesign { columns: Vec<String> },

    #[error("insufficient data: {context} (need {needed} rows, have {available})")]
    InsufficientData {
        context: String,
        needed: usize,
        available: usize,
    },

    #[error("solver did not converge after {iterations} iterations (best objective {objective}, gap {gap:e})")]
    Solver {
        iterations: usize,
        objective: f64,
        gap: f64,
    },

    #[error("nested-model violation: full objective {full} exceeds restricted objective {restricted}")]
    NestingViolation { full: f64, restricted: f64 },

    #[error("ingestion of {path} failed:\n  {}", lines.join("\n  "))]
    Ingest { path: String, lines: Vec<String> },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(other),
            },
        }
    }

    /// Process exit code for this failure class: 2 validation, 3 computation, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_) | Error::Ingest { .. } => 2,
            Error::Io { .. } | Error::Serialize(_) => 4,
            _ => 3,
        }
    }
}
