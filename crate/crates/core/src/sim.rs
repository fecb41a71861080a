//! The discrete-event loop.
//!
//! One run owns a single RNG stream consumed strictly in event order, so a
//! run is a pure function of its config (seed included).
//!
//! Each miner carries an independent exponential clock with mean
//! `λ / power`; the superposition of all clocks produces blocks at rate
//! `1 / λ`. Clocks are never restarted when a miner's view changes. The block
//! template (parents and transactions) is only resolved when the clock fires.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::dag::{BlockDag, RewardConfig};
use crate::error::{ConfigError, Result};
use crate::mempool::{InsertOutcome, Transaction};
use crate::miner::{InclusionIndex, MinerState, TxReceipt};
use crate::queue::{EventKind, EventQueue, Payload};
use crate::topology::Topology;
use crate::workload::{TxGenerator, WorkloadConfig};
use crate::{BlockId, MinerId};

/// Time until a miner with the given share of power finds its next block.
/// `None` for a miner without power, which never mines.
pub fn sample_block_interval<R: Rng + ?Sized>(power: f64, lambda: f64, rng: &mut R) -> Option<f64> {
    if !(power > 0.0) {
        return None;
    }
    let clock = Exp::new(power / lambda).expect("positive block rate");
    Some(clock.sample(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub per_miner_profit: Vec<f64>,
    pub per_miner_blocks: Vec<u64>,
    pub total_blocks: u64,
    pub block_capacity: u64,
    pub total_tx_included: u64,
    pub distinct_tx_included: u64,
    pub duplicate_inclusions: u64,
    pub total_capacity: u64,
    pub parallel_block_pairs: u64,
    pub blocks_with_parallel: u64,
    pub later_parallel_blocks: u64,
    pub txs_generated: u64,
    /// Simulated time at which mining started (end of warm-up).
    pub mining_started_at: f64,
    /// Simulated time of the last mined block.
    pub last_block_at: f64,
    /// Mean and minimum of the miner's pool fill ratio observed whenever a
    /// block was mined.
    pub mean_pool_fill: f64,
    pub min_pool_fill: f64,
}

impl RunReport {
    pub fn collision_rate(&self) -> f64 {
        self.duplicate_inclusions as f64 / self.total_capacity as f64
    }

    pub fn throughput(&self) -> Option<f64> {
        (self.total_tx_included > 0)
            .then(|| self.distinct_tx_included as f64 / self.total_tx_included as f64)
    }

    pub fn parallel_block_rate(&self) -> f64 {
        self.blocks_with_parallel as f64 / self.total_blocks as f64
    }

    pub fn worst_case_collision(&self) -> f64 {
        self.later_parallel_blocks as f64 / self.total_blocks as f64
    }

    pub fn total_profit(&self) -> f64 {
        self.per_miner_profit.iter().sum()
    }
}

/// Non-deterministic run facts, kept apart from the report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub wall_clock_seconds: f64,
    pub events_processed: u64,
    pub events_after_stop: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub dag: BlockDag,
    /// Every generated transaction, indexed by id.
    pub transactions: Vec<Transaction>,
    /// Each miner's view of the DAG tips once all deliveries have landed.
    pub final_tips: Vec<BTreeSet<BlockId>>,
    pub diagnostics: Diagnostics,
}

/// Runs one simulation and returns only the report.
pub fn run(config: &SimConfig) -> Result<RunReport, ConfigError> {
    simulate(config).map(|out| out.report)
}

/// Runs one simulation, keeping the final DAG and transaction log.
pub fn simulate(config: &SimConfig) -> Result<RunOutput, ConfigError> {
    config.validate()?;
    let timer = Timer::start();
    let mut sim = Simulation::new(config);
    sim.execute();
    let mut out = sim.finish();
    out.diagnostics.wall_clock_seconds = timer.elapsed();
    Ok(out)
}

struct Simulation<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    queue: EventQueue,
    /// Per origin, the `(target, hops, delay)` triples of a broadcast.
    fanout: Vec<Vec<(MinerId, usize, f64)>>,
    /// Lane offset for block deliveries; transaction deliveries use lanes
    /// `0..=diameter`.
    block_lanes: usize,
    miners: Vec<MinerState>,
    dag: BlockDag,
    inclusions: InclusionIndex,
    generator: TxGenerator,
    transactions: Vec<Transaction>,
    per_miner_blocks: Vec<u64>,
    mining: bool,
    stopped: bool,
    full_pools: usize,
    mining_started_at: f64,
    fill_sum: f64,
    fill_min: f64,
    events: u64,
    events_after_stop: u64,
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        let n = cfg.miner_count;
        let miners = (0..n)
            .map(|i| {
                MinerState::new(
                    i,
                    cfg.miner_powers[i],
                    cfg.miner_strategies[i],
                    cfg.mempool_capacity,
                )
            })
            .collect();
        let topology = Topology::new(cfg.topology, n, cfg.propagation_delay);
        Simulation {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            queue: EventQueue::new(),
            fanout: (0..n)
                .map(|o| {
                    topology
                        .broadcast(o, 0.0)
                        .into_iter()
                        .map(|(t, delay)| (t, topology.distance(o, t), delay))
                        .collect()
                })
                .collect(),
            block_lanes: topology.diameter() + 1,
            miners,
            dag: BlockDag::new(),
            inclusions: InclusionIndex::new(),
            generator: TxGenerator::new(WorkloadConfig {
                tx_gen_rate: cfg.effective_tx_rate(),
                fee_mean: cfg.fee_mean,
                node_count: n,
            }),
            transactions: Vec::new(),
            per_miner_blocks: vec![0; n],
            mining: false,
            stopped: false,
            full_pools: 0,
            mining_started_at: 0.0,
            fill_sum: 0.0,
            fill_min: f64::INFINITY,
            events: 0,
            events_after_stop: 0,
        }
    }

    fn schedule(&mut self, at: f64, kind: EventKind) {
        if let Err(e) = self.queue.schedule(at, kind) {
            panic!("event causality violated: {e}");
        }
    }

    fn schedule_in_lane(&mut self, lane: usize, at: f64, kind: EventKind) {
        if let Err(e) = self.queue.schedule_in_lane(lane, at, kind) {
            panic!("event causality violated: {e}");
        }
    }

    fn execute(&mut self) {
        let first = self.generator.sample_gap(&mut self.rng);
        self.schedule(first, EventKind::TxGenerated);
        if !self.cfg.warm_up {
            self.start_mining();
        }
        while let Some(event) = self.queue.pop() {
            self.events += 1;
            if self.stopped {
                self.events_after_stop += 1;
            }
            match event.kind {
                EventKind::TxGenerated => self.on_tx_generated(),
                EventKind::BlockMined(miner) => self.on_block_mined(miner),
                EventKind::Deliver {
                    target,
                    payload: Payload::Tx(tx),
                } => {
                    let tx = self.transactions[tx.0 as usize];
                    self.deliver_tx(target, tx);
                }
                EventKind::Deliver {
                    target,
                    payload: Payload::Block(block),
                } => {
                    self.miners[target].receive_block(block, &self.dag);
                }
            }
        }
    }

    fn start_mining(&mut self) {
        self.mining = true;
        let now = self.queue.now();
        self.mining_started_at = now;
        for m in 0..self.miners.len() {
            self.schedule_mining(m, now);
        }
    }

    fn schedule_mining(&mut self, miner: MinerId, now: f64) {
        let power = self.miners[miner].power();
        if let Some(dt) = sample_block_interval(power, self.cfg.block_creation_time, &mut self.rng) {
            self.schedule(now + dt, EventKind::BlockMined(miner));
        }
    }

    fn on_tx_generated(&mut self) {
        if self.stopped {
            return;
        }
        let now = self.queue.now();
        let arrival = self.generator.next_tx(&mut self.rng, now);
        debug_assert_eq!(arrival.tx.id.0 as usize, self.transactions.len());
        self.transactions.push(arrival.tx);
        self.deliver_tx(arrival.origin, arrival.tx);
        for i in 0..self.fanout[arrival.origin].len() {
            let (target, hops, delay) = self.fanout[arrival.origin][i];
            self.schedule_in_lane(
                hops,
                now + delay,
                EventKind::Deliver {
                    target,
                    payload: Payload::Tx(arrival.tx.id),
                },
            );
        }
        self.schedule(arrival.next_arrival, EventKind::TxGenerated);
    }

    fn deliver_tx(&mut self, target: MinerId, tx: Transaction) {
        let miner = &mut self.miners[target];
        let receipt = miner.receive_tx(tx, &self.inclusions);
        if !self.mining
            && matches!(receipt, TxReceipt::Pooled(InsertOutcome::Inserted))
            && miner.mempool().is_full()
        {
            self.full_pools += 1;
            if self.full_pools == self.miners.len() {
                self.start_mining();
            }
        }
    }

    fn on_block_mined(&mut self, miner: MinerId) {
        if self.stopped {
            return;
        }
        let now = self.queue.now();
        let fill = self.miners[miner].mempool().len() as f64 / self.cfg.mempool_capacity as f64;
        self.fill_sum += fill;
        self.fill_min = self.fill_min.min(fill);

        let id = self.dag.next_id();
        let block = self.miners[miner].build_block(id, now, self.cfg.block_capacity, &mut self.rng);
        self.inclusions.record(&block);
        self.dag
            .append_block(block)
            .expect("miner-built block satisfies DAG preconditions");
        self.per_miner_blocks[miner] += 1;
        self.miners[miner].receive_block(id, &self.dag);
        for i in 0..self.fanout[miner].len() {
            let (target, hops, delay) = self.fanout[miner][i];
            self.schedule_in_lane(
                self.block_lanes + hops,
                now + delay,
                EventKind::Deliver {
                    target,
                    payload: Payload::Block(id),
                },
            );
        }

        if self.dag.mined_count() as u64 >= self.cfg.total_blocks {
            self.stopped = true;
        } else {
            self.schedule_mining(miner, now);
        }
    }

    fn finish(self) -> RunOutput {
        let cfg = self.cfg;
        let fees: Vec<f64> = self.transactions.iter().map(|t| t.fee).collect();
        let rewards = self
            .dag
            .settle_rewards(&fees, RewardConfig { discount: cfg.discount })
            .expect("every included transaction was generated");
        let per_miner_profit = (0..cfg.miner_count)
            .map(|m| rewards.get(&m).copied().unwrap_or(0.0))
            .collect();
        let inclusion = self.dag.inclusion_stats();
        let parallel = self.dag.parallel_stats();
        let total_blocks = self.dag.mined_count() as u64;
        let last_block_at = self
            .dag
            .blocks()
            .last()
            .map_or(0.0, |b| b.mined_at);
        let report = RunReport {
            seed: cfg.seed,
            per_miner_profit,
            per_miner_blocks: self.per_miner_blocks,
            total_blocks,
            block_capacity: cfg.block_capacity as u64,
            total_tx_included: inclusion.total_included,
            distinct_tx_included: inclusion.distinct,
            duplicate_inclusions: inclusion.duplicates,
            total_capacity: total_blocks * cfg.block_capacity as u64,
            parallel_block_pairs: parallel.parallel_pairs,
            blocks_with_parallel: parallel.blocks_with_parallel,
            later_parallel_blocks: parallel.later_parallel_blocks,
            txs_generated: self.generator.generated(),
            mining_started_at: self.mining_started_at,
            last_block_at,
            mean_pool_fill: if total_blocks > 0 {
                self.fill_sum / total_blocks as f64
            } else {
                0.0
            },
            min_pool_fill: if total_blocks > 0 { self.fill_min } else { 0.0 },
        };
        RunOutput {
            report,
            final_tips: self.miners.iter().map(|m| m.tips().clone()).collect(),
            dag: self.dag,
            transactions: self.transactions,
            diagnostics: Diagnostics {
                wall_clock_seconds: 0.0,
                events_processed: self.events,
                events_after_stop: self.events_after_stop,
            },
        }
    }
}

/// Wall-clock timer; `std::time::Instant` is unavailable in the browser.
struct Timer {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Timer {
    fn start() -> Self {
        Timer {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
