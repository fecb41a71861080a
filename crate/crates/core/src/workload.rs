//! Transaction arrival process: Poisson arrivals, exponential fees and a
//! uniformly chosen origin node.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::mempool::Transaction;
use crate::{MinerId, TxId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadConfig {
    /// Transactions per second.
    pub tx_gen_rate: f64,
    pub fee_mean: f64,
    pub node_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub tx: Transaction,
    pub origin: MinerId,
    /// Absolute time of the next arrival.
    pub next_arrival: f64,
}

#[derive(Debug, Clone)]
pub struct TxGenerator {
    next_id: u64,
    fee: Exp<f64>,
    gap: Exp<f64>,
    node_count: usize,
}

impl TxGenerator {
    /// # Panics
    ///
    /// If the rate or the mean fee is not strictly positive, or there are no
    /// nodes.
    pub fn new(cfg: WorkloadConfig) -> Self {
        assert!(cfg.node_count > 0, "workload needs at least one node");
        TxGenerator {
            next_id: 0,
            fee: Exp::new(1.0 / cfg.fee_mean).expect("positive mean fee"),
            gap: Exp::new(cfg.tx_gen_rate).expect("positive arrival rate"),
            node_count: cfg.node_count,
        }
    }

    /// Number of transactions created so far; also the next id.
    pub fn generated(&self) -> u64 {
        self.next_id
    }

    pub fn sample_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.gap.sample(rng)
    }

    /// Creates the transaction arriving at `now`. Draw order: fee, origin,
    /// gap to the next arrival.
    pub fn next_tx<R: Rng + ?Sized>(&mut self, rng: &mut R, now: f64) -> Arrival {
        let mut fee = self.fee.sample(rng);
        // Exp can return exactly zero; fees are strictly positive.
        while fee <= 0.0 {
            fee = self.fee.sample(rng);
        }
        let origin = rng.random_range(0..self.node_count);
        let id = TxId(self.next_id);
        self.next_id += 1;
        Arrival {
            tx: Transaction {
                id,
                fee,
                created_at: now,
            },
            origin,
            next_arrival: now + self.gap.sample(rng),
        }
    }
}
