use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed deal: {0}")]
    MalformedDeal(String),

    #[error("parse error at column {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("x-count {count} out of range for suit with {in_play} cards in play")]
    XCountOutOfRange { count: u8, in_play: u8 },

    #[error("missing prior partition {0}")]
    MissingPartition(String),

    #[error("prior database for partition {partition} does not cover {deal}")]
    IncompletePrior { partition: String, deal: String },

    #[error("format error at offset {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("index {index} out of range (state count {count})")]
    IndexOutOfRange { index: u64, count: u64 },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
