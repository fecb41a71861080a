//! Post-run measures computed from the final DAG.
//!
//! A "duplicate" is any inclusion of a transaction beyond its first,
//! regardless of where in the DAG it sits, the same rule reward settlement
//! uses.

use serde::{Deserialize, Serialize};

use crate::dag::{BlockDag, InclusionStats, ParallelStats};
use crate::error::MetricsError;
use crate::MinerId;

/// Duplicate inclusions over total block capacity.
pub fn collision_rate(dag: &BlockDag, capacity_per_block: usize) -> Result<f64, MetricsError> {
    collision_rate_of(&dag.inclusion_stats(), capacity_per_block)
}

pub fn collision_rate_of(stats: &InclusionStats, capacity_per_block: usize) -> Result<f64, MetricsError> {
    if stats.blocks == 0 {
        return Err(MetricsError::NoBlocks);
    }
    Ok(stats.duplicates as f64 / (stats.blocks * capacity_per_block as u64) as f64)
}

/// Distinct transactions over all inclusions.
pub fn throughput(dag: &BlockDag) -> Result<f64, MetricsError> {
    throughput_of(&dag.inclusion_stats())
}

pub fn throughput_of(stats: &InclusionStats) -> Result<f64, MetricsError> {
    if stats.total_included == 0 {
        return Err(MetricsError::NoInclusions);
    }
    Ok(stats.distinct as f64 / stats.total_included as f64)
}

/// Fraction of mined blocks with at least one parallel block, i.e. the blocks
/// a single-chain protocol could have orphaned. Zero for an empty DAG.
pub fn parallel_block_rate(dag: &BlockDag) -> f64 {
    parallel_block_rate_of(&dag.parallel_stats())
}

pub fn parallel_block_rate_of(stats: &ParallelStats) -> f64 {
    if stats.blocks == 0 {
        0.0
    } else {
        stats.blocks_with_parallel as f64 / stats.blocks as f64
    }
}

/// Reference upper bound on the collision rate: every slot of every parallel
/// block except the first of its group is counted as a duplicate.
pub fn worst_case_collision(stats: &ParallelStats, capacity_per_block: usize) -> f64 {
    if stats.blocks == 0 {
        return 0.0;
    }
    let cap = capacity_per_block as f64;
    stats.later_parallel_blocks as f64 * cap / (stats.blocks as f64 * cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinerProfit {
    pub miner: MinerId,
    pub power: f64,
    pub absolute: f64,
    /// Share of all rewards.
    pub relative: f64,
    /// `relative / power`; 1.0 means paid in proportion to power.
    pub fairness: f64,
    /// Reward expected from power share alone.
    pub baseline: f64,
}

pub fn profit_per_miner(rewards: &[f64], powers: &[f64]) -> Result<Vec<MinerProfit>, MetricsError> {
    if rewards.len() != powers.len() {
        return Err(MetricsError::LengthMismatch {
            rewards: rewards.len(),
            powers: powers.len(),
        });
    }
    let total: f64 = rewards.iter().sum();
    if total <= 0.0 {
        return Err(MetricsError::ZeroReward);
    }
    Ok(rewards
        .iter()
        .zip(powers)
        .enumerate()
        .map(|(miner, (&absolute, &power))| {
            let relative = absolute / total;
            MinerProfit {
                miner,
                power,
                absolute,
                relative,
                fairness: relative / power,
                baseline: power * total,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{Block, RewardConfig};
    use crate::{BlockId, TxId};

    fn dag_of(blocks: &[(&[u64], &[u64])]) -> BlockDag {
        let mut dag = BlockDag::new();
        for (i, (parents, txs)) in blocks.iter().enumerate() {
            let id = (i + 1) as u64;
            dag.append_block(Block {
                id: BlockId(id),
                miner: Some(i % 2),
                mined_at: id as f64,
                parents: parents.iter().map(|&p| BlockId(p)).collect(),
                txs: txs.iter().map(|&t| TxId(t)).collect(),
            })
            .unwrap();
        }
        dag
    }

    #[test]
    fn unique_inclusions() {
        let dag = dag_of(&[(&[0], &[1, 2]), (&[1], &[3, 4])]);
        assert_eq!(collision_rate(&dag, 2).unwrap(), 0.0);
        assert_eq!(throughput(&dag).unwrap(), 1.0);
    }

    #[test]
    fn identical_blocks() {
        let txs: Vec<u64> = (0..100).collect();
        let dag = dag_of(&[(&[0], &txs), (&[0], &txs)]);
        assert_eq!(collision_rate(&dag, 100).unwrap(), 0.5);
        assert_eq!(throughput(&dag).unwrap(), 0.5);
        let three = dag_of(&[(&[0], &txs), (&[0], &txs), (&[0], &txs)]);
        assert_eq!(throughput(&three).unwrap(), 100.0 / 300.0);
    }

    #[test]
    fn chained_overlaps() {
        // {a,b},{b,c},{c,d}: b and c each included twice.
        let dag = dag_of(&[(&[0], &[1, 2]), (&[0], &[2, 3]), (&[0], &[3, 4])]);
        assert!((collision_rate(&dag, 2).unwrap() - 2.0 / 6.0).abs() < 1e-15);
        assert!((throughput(&dag).unwrap() - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn empty_dag_errors() {
        let dag = BlockDag::new();
        assert_eq!(collision_rate(&dag, 10), Err(MetricsError::NoBlocks));
        assert_eq!(throughput(&dag), Err(MetricsError::NoInclusions));
        assert_eq!(parallel_block_rate(&dag), 0.0);
        let empty_blocks = dag_of(&[(&[0], &[])]);
        assert_eq!(throughput(&empty_blocks), Err(MetricsError::NoInclusions));
    }

    #[test]
    fn parallel_rates() {
        let chain = dag_of(&[(&[0], &[]), (&[1], &[]), (&[2], &[])]);
        assert_eq!(parallel_block_rate(&chain), 0.0);
        assert_eq!(worst_case_collision(&chain.parallel_stats(), 100), 0.0);

        let diamond = dag_of(&[(&[0], &[]), (&[0], &[]), (&[1, 2], &[])]);
        assert!((parallel_block_rate(&diamond) - 2.0 / 3.0).abs() < 1e-15);
        assert!((worst_case_collision(&diamond.parallel_stats(), 100) - 100.0 / 300.0).abs() < 1e-15);
    }

    #[test]
    fn profit_table() {
        let t = profit_per_miner(&[42.0], &[1.0]).unwrap();
        assert_eq!((t[0].relative, t[0].fairness), (1.0, 1.0));

        let t = profit_per_miner(&[30.0, 10.0], &[0.5, 0.5]).unwrap();
        assert_eq!(t[0].relative, 0.75);
        assert_eq!(t[0].fairness, 1.5);
        assert_eq!(t[1].baseline, 20.0);
        assert_eq!(t.iter().map(|m| m.relative).sum::<f64>(), 1.0);

        assert_eq!(profit_per_miner(&[0.0, 0.0], &[0.5, 0.5]), Err(MetricsError::ZeroReward));
        assert!(matches!(
            profit_per_miner(&[1.0], &[0.5, 0.5]),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn accounting_identity() {
        // Two full blocks with one shared tx and a half-empty merge block.
        let dag = dag_of(&[(&[0], &[1, 2, 3]), (&[0], &[3, 4, 5]), (&[1, 2], &[6])]);
        let cap = 3;
        let stats = dag.inclusion_stats();
        let total_capacity = stats.blocks * cap as u64;
        let empty_slots = total_capacity - stats.total_included;
        let dup = collision_rate(&dag, cap).unwrap() * total_capacity as f64;
        assert_eq!(dup + stats.distinct as f64 + empty_slots as f64, total_capacity as f64);
        let thr = throughput(&dag).unwrap();
        assert!((thr - (1.0 - stats.duplicates as f64 / stats.total_included as f64)).abs() < 1e-15);
        assert!(collision_rate(&dag, cap).unwrap() <= worst_case_collision(&dag.parallel_stats(), cap));
        let rewards = dag.settle_rewards(&vec![1.0; 7], RewardConfig::default()).unwrap();
        assert_eq!(rewards.values().sum::<f64>(), stats.distinct as f64);
    }
}
