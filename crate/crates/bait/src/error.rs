use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Ways a binary store or checkpoint can be malformed.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown space byte {0}")]
    BadSpace(u8),
    #[error("unknown unit byte {0}")]
    BadUnit(u8),
    #[error("record {}: payload is {found} values wide but the header says {expected}", id.map_or("?".to_string(), |i| i.to_string()))]
    Dimension { id: Option<u32>, expected: usize, found: usize },
    #[error("truncated payload at byte {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("{0} trailing bytes after the last record")]
    Trailing(usize),
    #[error("record {0} holds a non-finite value")]
    NonFinite(u32),
    #[error("duplicate record id {0}")]
    DuplicateId(u32),
    #[error("head record {id} has {rows} rows")]
    HeadRows { id: u32, rows: usize },
    #[error("{0}")]
    Layout(String),
}

#[derive(Debug, Error)]
pub enum BaitError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Store { path: PathBuf, source: StoreError },
    #[error("{path}: row {row}: {message}")]
    Csv { path: PathBuf, row: u64, message: String },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: bait_core::Error },
    #[error("configuration: {0}")]
    Config(String),
    #[error("integrity: {0}")]
    Integrity(String),
    /// A checkpoint that does not fit the data it is applied to.
    #[error("checkpoint mismatch: {0}")]
    Mismatch(String),
    /// Failure while training, tuning or evaluating.
    #[error("{0}")]
    Run(bait_core::Error),
    #[error("{0}")]
    Core(bait_core::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = BaitError> = std::result::Result<T, E>;

impl BaitError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        BaitError::Io { path: path.into(), source }
    }

    /// 2 for bad input or integrity failures, 3 for training and
    /// evaluation contract failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BaitError::Mismatch(_) | BaitError::Run(_) => 3,
            _ => 2,
        }
    }
}

impl From<bait_core::Error> for BaitError {
    fn from(e: bait_core::Error) -> Self {
        match e {
            bait_core::Error::Contract(_) | bait_core::Error::Numerical(_) => BaitError::Run(e),
            other => BaitError::Core(other),
        }
    }
}
