use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown code `{0}` (built-in codes: g2, g3, g4, h3)")]
    UnknownCode(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("code is not orthogonal: max deviation {max_deviation:e} ({detail})")]
    NonOrthogonal { max_deviation: f64, detail: String },

    #[error("degenerate channel: sigma = 0, cannot divide")]
    DegenerateChannel,

    #[error("quantizer alphabet is empty")]
    EmptyAlphabet,

    #[error("exhaustive search over {candidates} candidates exceeds the limit of {limit}")]
    SearchSpaceTooLarge { candidates: u128, limit: u128 },

    #[error("unsupported constellation `{0}`: only square QAM (4qam, 16qam, 64qam, 256qam) is separable per dimension")]
    UnsupportedConstellation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schedule reads slot `{0}` before it is bound")]
    UnboundSlot(String),

    #[error("schedule writes slot `{0}` more than once")]
    Reassigned(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
