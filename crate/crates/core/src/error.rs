use thiserror::Error;

/// Errors raised anywhere in the solver kit.
#[derive(Debug, Error)]
pub enum Error {
    /// A rate evaluator produced a negative production entry.
    #[error("negative production rate p[{row}][{col}] = {value:e}")]
    NegativeRate { row: usize, col: usize, value: f64 },

    /// An input violated a documented precondition of an operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Non-finite number where a finite one was required.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// The stage linear system had a zero pivot.
    #[error("singular stage system (pivot {pivot} in column {column})")]
    Singular { column: usize, pivot: f64 },

    /// A multistep scheme was asked to step without enough history levels.
    #[error("multistep history has {have} levels, {need} required")]
    Bootstrap { have: usize, need: usize },

    /// A scheme or run configuration is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// A state left the admissible set.
    #[error("inadmissible state{}: {detail}", location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Admissibility { location: Option<String>, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn admissibility(detail: impl Into<String>) -> Self {
        Error::Admissibility { location: None, detail: detail.into() }
    }

    /// Attach a location (cell index, step, stage) to an admissibility error.
    pub fn at(self, location: impl Into<String>) -> Self {
        match self {
            Error::Admissibility { location: None, detail } => {
                Error::Admissibility { location: Some(location.into()), detail }
            }
            Error::Admissibility { location: Some(inner), detail } => Error::Admissibility {
                location: Some(format!("{}, {inner}", location.into())),
                detail,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
