//! Per-miner state: local mempool, the set of blocks received so far and the
//! tips of that local view.
//!
//! Duplicate avoidance is purely local: a miner skips transactions contained
//! in blocks it has received, nothing more. Two miners that have not yet
//! heard of each other's blocks can therefore include the same transaction.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use smallvec::SmallVec;

use crate::config::Strategy;
use crate::dag::{Block, BlockDag};
use crate::mempool::{InsertOutcome, Mempool, Transaction};
use crate::{BlockId, MinerId, TxId};

/// Which blocks contain a given transaction, across the whole network.
///
/// Transaction ids are dense, so the first inclusion lives in a flat vector;
/// the rare further inclusions go to a side map.
#[derive(Debug, Default, Clone)]
pub struct InclusionIndex {
    first: Vec<Option<BlockId>>,
    more: HashMap<TxId, SmallVec<[BlockId; 2]>>,
}

impl InclusionIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, block: &Block) {
        for &tx in &block.txs {
            let index = tx.0 as usize;
            if self.first.len() <= index {
                self.first.resize(index + 1, None);
            }
            match self.first[index] {
                None => self.first[index] = Some(block.id),
                Some(_) => self.more.entry(tx).or_default().push(block.id),
            }
        }
    }

    /// Calls `f` on every block containing `tx` until it returns true.
    pub fn any_block_with(&self, tx: TxId, mut f: impl FnMut(BlockId) -> bool) -> bool {
        match self.first.get(tx.0 as usize).copied().flatten() {
            None => false,
            Some(b) if f(b) => true,
            Some(_) => self
                .more
                .get(&tx)
                .is_some_and(|rest| rest.iter().any(|&b| f(b))),
        }
    }

    pub fn blocks_with(&self, tx: TxId) -> Vec<BlockId> {
        let mut out = Vec::new();
        self.any_block_with(tx, |b| {
            out.push(b);
            false
        });
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxReceipt {
    Pooled(InsertOutcome),
    /// Already contained in a block this miner knows.
    AlreadyIncluded,
}

#[derive(Debug, Clone)]
pub struct MinerState {
    id: MinerId,
    power: f64,
    strategy: Strategy,
    mempool: Mempool,
    known: Vec<bool>,
    tips: BTreeSet<BlockId>,
    /// Blocks delivered before one of their parents, keyed by that parent.
    waiting: HashMap<BlockId, Vec<BlockId>>,
}

impl MinerState {
    pub fn new(id: MinerId, power: f64, strategy: Strategy, mempool_capacity: usize) -> Self {
        MinerState {
            id,
            power,
            strategy,
            mempool: Mempool::new(mempool_capacity),
            known: vec![true],
            tips: BTreeSet::from([BlockId::GENESIS]),
            waiting: HashMap::new(),
        }
    }

    pub fn id(&self) -> MinerId {
        self.id
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn mempool(&self) -> &Mempool {
        &self.mempool
    }

    pub fn knows(&self, block: BlockId) -> bool {
        self.known.get(block.index()).copied().unwrap_or(false)
    }

    /// Tips of the sub-DAG this miner has received.
    pub fn tips(&self) -> &BTreeSet<BlockId> {
        &self.tips
    }

    pub fn buffered(&self) -> usize {
        self.waiting.values().map(Vec::len).sum()
    }

    /// Picks transactions per strategy.
    pub fn select<R: Rng + ?Sized>(&self, capacity: usize, rng: &mut R) -> Vec<Transaction> {
        match self.strategy {
            Strategy::Random => self.mempool.select_random(capacity, rng),
            Strategy::Rational => self.mempool.select_top_fee(capacity),
        }
    }

    /// Builds the block this miner publishes at `now`: parents are its current
    /// tips, transactions are chosen per strategy and leave the local pool.
    /// The block is not yet marked as known; deliver it back to the miner with
    /// [`MinerState::receive_block`].
    pub fn build_block<R: Rng + ?Sized>(
        &mut self,
        id: BlockId,
        now: f64,
        capacity: usize,
        rng: &mut R,
    ) -> Block {
        let txs: Vec<TxId> = self.select(capacity, rng).iter().map(|t| t.id).collect();
        self.mempool.remove_all(&txs);
        Block {
            id,
            miner: Some(self.id),
            mined_at: now,
            parents: self.tips.iter().copied().collect(),
            txs,
        }
    }

    /// Handles a block delivery. Blocks whose parents are not all known are
    /// parked until they are. Returns the number of blocks that became known,
    /// counting released parked ones.
    pub fn receive_block(&mut self, block: BlockId, dag: &BlockDag) -> usize {
        let mut accepted = 0;
        let mut work = vec![block];
        while let Some(id) = work.pop() {
            if self.knows(id) {
                continue;
            }
            let b = dag.get(id).expect("delivered block exists in the global DAG");
            if let Some(&missing) = b.parents.iter().find(|&&p| !self.knows(p)) {
                let parked = self.waiting.entry(missing).or_default();
                if !parked.contains(&id) {
                    parked.push(id);
                }
                continue;
            }
            self.accept(b);
            accepted += 1;
            if let Some(released) = self.waiting.remove(&id) {
                work.extend(released);
            }
        }
        accepted
    }

    fn accept(&mut self, block: &Block) {
        let index = block.id.index();
        if self.known.len() <= index {
            self.known.resize(index + 1, false);
        }
        self.known[index] = true;
        self.mempool.remove_all(&block.txs);
        for parent in &block.parents {
            self.tips.remove(parent);
        }
        self.tips.insert(block.id);
    }

    pub fn receive_tx(&mut self, tx: Transaction, inclusions: &InclusionIndex) -> TxReceipt {
        if inclusions.any_block_with(tx.id, |b| self.knows(b)) {
            return TxReceipt::AlreadyIncluded;
        }
        TxReceipt::Pooled(self.mempool.insert(tx))
    }
}
