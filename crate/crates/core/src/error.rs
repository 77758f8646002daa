use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("sampler failed at draw {draw} in block `{block}`: {source}")]
    Sampler {
        draw: usize,
        block: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn in_block(self, draw: usize, block: &'static str) -> Error {
        Error::Sampler {
            draw,
            block,
            source: Box::new(self),
        }
    }
}
