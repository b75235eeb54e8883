use thiserror::Error;

use crate::observation::EpochTime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A channel value that cannot be converted to a level (counts ≤ 0, NaN).
    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    /// A grid or record that violates its structural invariants.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Epoch bins must arrive in increasing time order.
    #[error("epoch bin {got} arrived after bin {previous}")]
    Sequencing { previous: EpochTime, got: EpochTime },

    #[error("duplicate record for satellite {sat} at epoch {time}")]
    Duplicate { sat: u8, time: EpochTime },

    /// Positioned parse failure; `line` is 1-based.
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    /// A tabular input whose header or columns do not match the expected layout.
    #[error("schema mismatch in column `{column}`: {message}")]
    Schema { column: String, message: String },

    #[error("flag and truth streams are misaligned: {0}")]
    Misaligned(String),

    /// Wraps an error raised while consuming the `record`-th input record (1-based).
    #[error("record {record}: {source}")]
    AtRecord {
        record: usize,
        #[source]
        source: Box<Error>,
    },

    /// Wraps an error raised at a 1-based input line.
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips `AtRecord` and `AtLine` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtRecord { source, .. } | Error::AtLine { source, .. } => source.root(),
            other => other,
        }
    }
}
