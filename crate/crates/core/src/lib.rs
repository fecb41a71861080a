//! Deterministic discrete-event simulation of proof-of-work block-DAG networks
//! in which some miners pick transactions by highest fee instead of uniformly
//! at random.
//!
//! The crate is organised bottom-up:
//!
//! - [`queue`]: time-ordered event queue with insertion-order tie-breaking.
//! - [`topology`]: ring/complete topologies and hop-based propagation delays.
//! - [`mempool`]: per-miner pool indexed both by id and by fee.
//! - [`dag`]: the global append-only block DAG, reachability and reward settlement.
//! - [`miner`]: per-miner local view and the two selection strategies.
//! - [`workload`]: the transaction arrival process.
//! - [`sim`]: the event loop tying everything together.
//! - [`metrics`]: collision rate, throughput, profit shares, parallel-block rate.
//! - [`experiment`]: the batch sweeps and their CSV output.

pub mod config;
pub mod dag;
pub mod error;
pub mod experiment;
pub mod mempool;
pub mod metrics;
pub mod miner;
pub mod queue;
pub mod sim;
pub mod topology;
pub mod workload;

pub use config::{SimConfig, Strategy, TopologyKind};
pub use dag::{Block, BlockDag, RewardConfig};
pub use error::{ConfigError, Error, Result};
pub use mempool::{Mempool, Transaction};
pub use sim::{run, simulate, RunOutput, RunReport};

use serde::{Deserialize, Serialize};

/// Index of a miner, which is also its node position in the topology.
pub type MinerId = usize;

/// Unique transaction identifier. Ids are assigned in creation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TxId(pub u64);

/// Unique block identifier. The genesis block is `BlockId(0)`; later ids are
/// dense and follow append order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockId(pub u64);

impl BlockId {
    pub const GENESIS: BlockId = BlockId(0);

    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for TxId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "tx{}", self.0)
    }
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "b{}", self.0)
    }
}
