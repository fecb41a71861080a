//! Multi-index pool of pending transactions.
//!
//! Two indexes are kept over the same set: an insertion-ordered hash index
//! (`by_id`) that supports O(1) positional access for uniform sampling, and a
//! B-tree ordered by `(fee desc, id asc)` for highest-fee selection and
//! lowest-fee eviction.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::Rng;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::TxId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    pub fee: f64,
    pub created_at: f64,
}

/// Outcome of [`Mempool::insert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    /// The pool was full and the new transaction did not out-bid the
    /// cheapest resident.
    Rejected,
    /// The pool was full; the given resident was dropped to make room.
    Evicted(TxId),
    /// A transaction with this id is already resident. Nothing changed.
    Duplicate,
}

/// `(fee desc, id asc)` packed into one integer: the high half is the
/// bitwise complement of the fee's bits (monotone for non-negative floats),
/// the low half is the id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct FeeKey(u128);

impl FeeKey {
    fn new(fee: f64, id: TxId) -> Self {
        debug_assert!(fee >= 0.0, "fees are non-negative");
        FeeKey(((!fee.to_bits()) as u128) << 64 | id.0 as u128)
    }

    fn id(self) -> TxId {
        TxId(self.0 as u64)
    }

    fn fee(self) -> f64 {
        f64::from_bits(!((self.0 >> 64) as u64))
    }
}

#[derive(Debug, Clone)]
pub struct Mempool {
    by_id: IndexMap<TxId, Transaction, FxBuildHasher>,
    by_fee: BTreeSet<FeeKey>,
    capacity: usize,
}

impl Mempool {
    pub fn new(capacity: usize) -> Self {
        Mempool {
            by_id: IndexMap::with_capacity_and_hasher(capacity, FxBuildHasher),
            by_fee: BTreeSet::new(),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.by_id.len() >= self.capacity
    }

    pub fn contains(&self, id: TxId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn get(&self, id: TxId) -> Option<&Transaction> {
        self.by_id.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.by_id.values()
    }

    /// Cheapest resident under the `(fee desc, id asc)` order, i.e. the one
    /// evicted next.
    pub fn lowest(&self) -> Option<&Transaction> {
        self.by_fee.last().map(|k| &self.by_id[&k.id()])
    }

    pub fn insert(&mut self, tx: Transaction) -> InsertOutcome {
        if self.by_id.contains_key(&tx.id) {
            return InsertOutcome::Duplicate;
        }
        let key = FeeKey::new(tx.fee, tx.id);
        if self.by_id.len() < self.capacity {
            self.by_id.insert(tx.id, tx);
            self.by_fee.insert(key);
            return InsertOutcome::Inserted;
        }
        match self.by_fee.last().copied() {
            Some(lowest) if tx.fee > lowest.fee() => {
                self.by_fee.pop_last();
                self.by_id.swap_remove(&lowest.id());
                self.by_id.insert(tx.id, tx);
                self.by_fee.insert(key);
                InsertOutcome::Evicted(lowest.id())
            }
            _ => InsertOutcome::Rejected,
        }
    }

    pub fn remove(&mut self, id: TxId) -> Option<Transaction> {
        let tx = self.by_id.swap_remove(&id)?;
        self.by_fee.remove(&FeeKey::new(tx.fee, id));
        Some(tx)
    }

    /// Removes every resident id in `ids`; absent ids are ignored. Returns
    /// the number actually removed.
    pub fn remove_all<'a>(&mut self, ids: impl IntoIterator<Item = &'a TxId>) -> usize {
        ids.into_iter()
            .filter(|&&id| self.remove(id).is_some())
            .count()
    }

    /// The `min(k, len)` highest-fee transactions, ties broken by ascending id.
    pub fn select_top_fee(&self, k: usize) -> Vec<Transaction> {
        self.by_fee
            .iter()
            .take(k)
            .map(|key| self.by_id[&key.id()])
            .collect()
    }

    /// `min(k, len)` distinct transactions drawn uniformly without
    /// replacement.
    pub fn select_random<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<Transaction> {
        let n = self.by_id.len();
        let amount = k.min(n);
        rand::seq::index::sample(rng, n, amount)
            .into_iter()
            .map(|i| *self.by_id.get_index(i).expect("sampled index in range").1)
            .collect()
    }

    /// Full reconciliation of both indexes.
    pub fn is_coherent(&self) -> bool {
        self.by_id.len() == self.by_fee.len()
            && self.by_id.len() <= self.capacity
            && self.by_fee.iter().all(|k| {
                self.by_id
                    .get(&k.id())
                    .is_some_and(|tx| tx.fee.total_cmp(&k.fee()) == Ordering::Equal)
            })
    }
}
