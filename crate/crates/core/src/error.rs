use std::path::PathBuf;

use thiserror::Error;

use crate::{BlockId, TxId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("could not read config file {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("could not parse config: {0}")]
    Parse(String),
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// Name of the offending field for validation failures.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DagError {
    #[error("block {block} references unknown parent {parent}")]
    MissingParent { block: BlockId, parent: BlockId },
    #[error("block id {got} is not the next free id {expected}")]
    NonSequentialId { expected: BlockId, got: BlockId },
    #[error("block {0} has no parents")]
    NoParents(BlockId),
    #[error("parent {parent} of block {block} was not mined strictly earlier")]
    ParentNotEarlier { block: BlockId, parent: BlockId },
    #[error("block {block} contains {tx} more than once")]
    DuplicateTx { block: BlockId, tx: TxId },
    #[error("no fee recorded for {0}")]
    MissingFee(TxId),
    #[error("unknown block {0}")]
    UnknownBlock(BlockId),
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no blocks were mined")]
    NoBlocks,
    #[error("no transactions were included")]
    NoInclusions,
    #[error("total reward is zero; relative profit is undefined")]
    ZeroReward,
    #[error("reward and power tables differ in length ({rewards} vs {powers})")]
    LengthMismatch { rewards: usize, powers: usize },
}
