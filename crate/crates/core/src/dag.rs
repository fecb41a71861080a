//! Global append-only block DAG.
//!
//! Besides storage and tip tracking, the DAG keeps a compact reachability
//! index: the past of every block is stored as a contiguous prefix of block
//! indices plus a short sorted list of further ancestors above that prefix.
//! Once a block has propagated everywhere every later block has it in its
//! prefix, so the explicit part only covers the recent, not yet merged
//! region and stays small.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::DagError;
use crate::{BlockId, MinerId, TxId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    /// `None` only for genesis.
    pub miner: Option<MinerId>,
    pub mined_at: f64,
    pub parents: Vec<BlockId>,
    pub txs: Vec<TxId>,
}

impl Block {
    pub fn genesis() -> Self {
        Block {
            id: BlockId::GENESIS,
            miner: None,
            mined_at: 0.0,
            parents: Vec::new(),
            txs: Vec::new(),
        }
    }

    pub fn is_genesis(&self) -> bool {
        self.id == BlockId::GENESIS
    }
}

/// Multiplier applied to every first-inclusion fee. Stands in for the
/// discount function with the gap parameter held at a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub discount: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig { discount: 1.0 }
    }
}

/// Source of transaction fees for reward settlement.
pub trait FeeBook {
    fn fee(&self, tx: TxId) -> Option<f64>;
}

impl FeeBook for HashMap<TxId, f64> {
    fn fee(&self, tx: TxId) -> Option<f64> {
        self.get(&tx).copied()
    }
}

impl FeeBook for BTreeMap<TxId, f64> {
    fn fee(&self, tx: TxId) -> Option<f64> {
        self.get(&tx).copied()
    }
}

/// Fees indexed densely by transaction id.
impl FeeBook for [f64] {
    fn fee(&self, tx: TxId) -> Option<f64> {
        self.get(tx.0 as usize).copied()
    }
}

impl FeeBook for Vec<f64> {
    fn fee(&self, tx: TxId) -> Option<f64> {
        self.as_slice().fee(tx)
    }
}

#[derive(Debug, Clone, Default)]
struct Past {
    /// Every block with index below `prefix` is an ancestor.
    prefix: u32,
    /// Further ancestors, all `>= prefix`, sorted.
    extra: Vec<u32>,
}

impl Past {
    fn contains(&self, index: u32) -> bool {
        index < self.prefix || self.extra.binary_search(&index).is_ok()
    }

    fn len(&self) -> usize {
        self.prefix as usize + self.extra.len()
    }
}

/// Counts over the set of mined (non-genesis) blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionStats {
    pub blocks: u64,
    pub total_included: u64,
    pub distinct: u64,
    pub duplicates: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelStats {
    /// Mined blocks, genesis excluded.
    pub blocks: u64,
    /// Unordered pairs of mutually unreachable blocks.
    pub parallel_pairs: u64,
    /// Blocks with at least one parallel block.
    pub blocks_with_parallel: u64,
    /// Blocks with a parallel block that comes earlier in `(mined_at, id)`
    /// order, i.e. every parallel block except the first of its group.
    pub later_parallel_blocks: u64,
}

#[derive(Debug, Clone)]
pub struct BlockDag {
    blocks: Vec<Block>,
    pasts: Vec<Past>,
    tips: BTreeSet<BlockId>,
}

impl Default for BlockDag {
    fn default() -> Self {
        Self::new()
    }
}

impl BlockDag {
    pub fn new() -> Self {
        BlockDag {
            blocks: vec![Block::genesis()],
            pasts: vec![Past::default()],
            tips: BTreeSet::from([BlockId::GENESIS]),
        }
    }

    /// Number of blocks including genesis.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    /// Always false: genesis exists from construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mined_count(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn next_id(&self) -> BlockId {
        BlockId(self.blocks.len() as u64)
    }

    pub fn get(&self, id: BlockId) -> Option<&Block> {
        self.blocks.get(id.index())
    }

    pub fn contains(&self, id: BlockId) -> bool {
        id.index() < self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Mined blocks in `(mined_at, id)` order.
    pub fn mined_in_time_order(&self) -> Vec<&Block> {
        let mut out: Vec<&Block> = self.blocks.iter().skip(1).collect();
        out.sort_by(|a, b| a.mined_at.total_cmp(&b.mined_at).then(a.id.cmp(&b.id)));
        out
    }

    pub fn tips(&self) -> &BTreeSet<BlockId> {
        &self.tips
    }

    pub fn append_block(&mut self, block: Block) -> Result<BlockId, DagError> {
        let expected = self.next_id();
        if block.id != expected {
            return Err(DagError::NonSequentialId {
                expected,
                got: block.id,
            });
        }
        if block.parents.is_empty() {
            return Err(DagError::NoParents(block.id));
        }
        for &parent in &block.parents {
            let p = self.get(parent).ok_or(DagError::MissingParent {
                block: block.id,
                parent,
            })?;
            if !p.is_genesis() && !(p.mined_at < block.mined_at) {
                return Err(DagError::ParentNotEarlier {
                    block: block.id,
                    parent,
                });
            }
        }
        let mut seen = HashSet::with_capacity(block.txs.len());
        if let Some(&dup) = block.txs.iter().find(|&&tx| !seen.insert(tx)) {
            return Err(DagError::DuplicateTx {
                block: block.id,
                tx: dup,
            });
        }

        let past = self.past_of_new(&block.parents);
        for parent in &block.parents {
            self.tips.remove(parent);
        }
        self.tips.insert(block.id);
        self.pasts.push(past);
        self.blocks.push(block);
        Ok(expected)
    }

    fn past_of_new(&self, parents: &[BlockId]) -> Past {
        let mut prefix = parents
            .iter()
            .map(|p| self.pasts[p.index()].prefix)
            .max()
            .unwrap_or(0);
        let mut extra: Vec<u32> = Vec::new();
        for p in parents {
            let index = p.0 as u32;
            if index >= prefix {
                extra.push(index);
            }
            extra.extend(self.pasts[p.index()].extra.iter().filter(|&&x| x >= prefix));
        }
        extra.sort_unstable();
        extra.dedup();
        let absorbed = extra
            .iter()
            .zip(prefix..)
            .take_while(|(&x, expected)| x == *expected)
            .count();
        prefix += absorbed as u32;
        extra.drain(..absorbed);
        Past { prefix, extra }
    }

    /// Whether `ancestor` is reachable from `descendant` through parent links.
    /// A block is not its own ancestor.
    pub fn is_ancestor(&self, ancestor: BlockId, descendant: BlockId) -> Result<bool, DagError> {
        for id in [ancestor, descendant] {
            if !self.contains(id) {
                return Err(DagError::UnknownBlock(id));
            }
        }
        Ok(self.pasts[descendant.index()].contains(ancestor.0 as u32))
    }

    /// True iff neither block is an ancestor of the other. A block is not
    /// parallel to itself.
    pub fn is_parallel(&self, a: BlockId, b: BlockId) -> Result<bool, DagError> {
        if a == b {
            return if self.contains(a) {
                Ok(false)
            } else {
                Err(DagError::UnknownBlock(a))
            };
        }
        Ok(!self.is_ancestor(a, b)? && !self.is_ancestor(b, a)?)
    }

    /// Size of the past (ancestor set) of a block.
    pub fn past_size(&self, id: BlockId) -> Option<usize> {
        self.pasts.get(id.index()).map(Past::len)
    }

    /// Tips of the sub-DAG made of the blocks for which `visible` holds.
    /// The visible set is expected to be closed under taking parents.
    pub fn tips_within(&self, visible: impl Fn(BlockId) -> bool) -> BTreeSet<BlockId> {
        let mut tips: BTreeSet<BlockId> = BTreeSet::new();
        let mut referenced: HashSet<BlockId> = HashSet::new();
        for block in self.blocks.iter().filter(|b| visible(b.id)) {
            tips.insert(block.id);
            referenced.extend(block.parents.iter().copied());
        }
        tips.retain(|id| !referenced.contains(id));
        tips
    }

    /// Parallel-block statistics over the mined blocks. Runs in time
    /// proportional to the total anticone size.
    pub fn parallel_stats(&self) -> ParallelStats {
        let n = self.blocks.len();
        let mut has_parallel = vec![false; n];
        let mut has_earlier_parallel = vec![false; n];
        let mut pairs = 0u64;
        for (index, past) in self.pasts.iter().enumerate().skip(1) {
            let b = &self.blocks[index];
            let mut extra = past.extra.iter().peekable();
            for other in past.prefix..index as u32 {
                if extra.next_if_eq(&&other).is_some() {
                    continue;
                }
                let o = &self.blocks[other as usize];
                pairs += 1;
                has_parallel[index] = true;
                has_parallel[other as usize] = true;
                let other_first = (o.mined_at, o.id) < (b.mined_at, b.id);
                if other_first {
                    has_earlier_parallel[index] = true;
                } else {
                    has_earlier_parallel[other as usize] = true;
                }
            }
        }
        let count = |flags: &[bool]| flags.iter().skip(1).filter(|&&f| f).count() as u64;
        ParallelStats {
            blocks: (n - 1) as u64,
            parallel_pairs: pairs,
            blocks_with_parallel: count(&has_parallel),
            later_parallel_blocks: count(&has_earlier_parallel),
        }
    }

    pub fn inclusion_stats(&self) -> InclusionStats {
        let mut seen: HashSet<TxId> = HashSet::new();
        let mut total = 0u64;
        for block in &self.blocks {
            total += block.txs.len() as u64;
            seen.extend(block.txs.iter().copied());
        }
        let distinct = seen.len() as u64;
        InclusionStats {
            blocks: self.mined_count() as u64,
            total_included: total,
            distinct,
            duplicates: total - distinct,
        }
    }

    /// First-inclusion payoff: each transaction pays `fee × discount` to the
    /// miner of the earliest block containing it, ordered by
    /// `(mined_at, id)`. Later inclusions earn nothing.
    pub fn settle_rewards<F: FeeBook + ?Sized>(
        &self,
        fees: &F,
        cfg: RewardConfig,
    ) -> Result<BTreeMap<MinerId, f64>, DagError> {
        let mut rewards: BTreeMap<MinerId, f64> = BTreeMap::new();
        let mut paid: HashSet<TxId> = HashSet::new();
        for block in self.mined_in_time_order() {
            let Some(miner) = block.miner else { continue };
            let entry = rewards.entry(miner).or_insert(0.0);
            for &tx in &block.txs {
                let fee = fees.fee(tx).ok_or(DagError::MissingFee(tx))?;
                if paid.insert(tx) {
                    *entry += fee * cfg.discount;
                }
            }
        }
        Ok(rewards)
    }

    /// Text dump, one line per block: `id,miner,mined_at,parents,tx_count`
    /// with parent ids separated by `;` and `-` as genesis' miner.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "id,miner,mined_at,parents,tx_count")?;
        for b in &self.blocks {
            let miner = b.miner.map_or_else(|| "-".to_string(), |m| m.to_string());
            let parents: Vec<String> = b.parents.iter().map(|p| p.0.to_string()).collect();
            writeln!(
                out,
                "{},{},{},{},{}",
                b.id.0,
                miner,
                b.mined_at,
                parents.join(";"),
                b.txs.len()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(id: u64, miner: MinerId, at: f64, parents: &[u64], txs: &[u64]) -> Block {
        Block {
            id: BlockId(id),
            miner: Some(miner),
            mined_at: at,
            parents: parents.iter().map(|&p| BlockId(p)).collect(),
            txs: txs.iter().map(|&t| TxId(t)).collect(),
        }
    }

    fn ids(v: &[u64]) -> BTreeSet<BlockId> {
        v.iter().map(|&i| BlockId(i)).collect()
    }

    /// genesis <- 1, genesis <- 2, {1,2} <- 3
    fn diamond() -> BlockDag {
        let mut dag = BlockDag::new();
        dag.append_block(block(1, 0, 1.0, &[0], &[])).unwrap();
        dag.append_block(block(2, 1, 2.0, &[0], &[])).unwrap();
        dag.append_block(block(3, 0, 3.0, &[1, 2], &[])).unwrap();
        dag
    }

    #[test]
    fn append_to_genesis_moves_tip() {
        let mut dag = BlockDag::new();
        assert_eq!(dag.tips(), &ids(&[0]));
        dag.append_block(block(1, 0, 1.0, &[0], &[])).unwrap();
        assert_eq!(dag.tips(), &ids(&[1]));
    }

    #[test]
    fn siblings_and_merge() {
        let mut dag = BlockDag::new();
        dag.append_block(block(1, 0, 1.0, &[0], &[])).unwrap();
        dag.append_block(block(2, 1, 2.0, &[0], &[])).unwrap();
        assert_eq!(dag.tips(), &ids(&[1, 2]));
        dag.append_block(block(3, 0, 3.0, &[1, 2], &[])).unwrap();
        assert_eq!(dag.tips(), &ids(&[3]));
    }

    #[test]
    fn append_errors() {
        let mut dag = BlockDag::new();
        assert_eq!(
            dag.append_block(block(1, 0, 1.0, &[5], &[])),
            Err(DagError::MissingParent {
                block: BlockId(1),
                parent: BlockId(5)
            })
        );
        assert!(matches!(
            dag.append_block(block(7, 0, 1.0, &[0], &[])),
            Err(DagError::NonSequentialId { .. })
        ));
        assert_eq!(
            dag.append_block(block(1, 0, 1.0, &[], &[])),
            Err(DagError::NoParents(BlockId(1)))
        );
        assert!(matches!(
            dag.append_block(block(1, 0, 1.0, &[0], &[4, 4])),
            Err(DagError::DuplicateTx { .. })
        ));
        dag.append_block(block(1, 0, 5.0, &[0], &[])).unwrap();
        assert!(matches!(
            dag.append_block(block(2, 0, 5.0, &[1], &[])),
            Err(DagError::ParentNotEarlier { .. })
        ));
        assert_eq!(dag.len(), 2);
    }

    #[test]
    fn parallel_queries() {
        let dag = diamond();
        let b = BlockId;
        assert!(!dag.is_parallel(b(1), b(3)).unwrap());
        assert!(dag.is_parallel(b(1), b(2)).unwrap());
        assert!(!dag.is_parallel(b(2), b(2)).unwrap());
        assert!(dag.is_ancestor(b(0), b(3)).unwrap());
        assert!(!dag.is_ancestor(b(3), b(0)).unwrap());
        assert_eq!(dag.is_parallel(b(1), b(9)), Err(DagError::UnknownBlock(b(9))));
    }

    #[test]
    fn parallel_stats_of_diamond() {
        let stats = diamond().parallel_stats();
        assert_eq!(
            stats,
            ParallelStats {
                blocks: 3,
                parallel_pairs: 1,
                blocks_with_parallel: 2,
                later_parallel_blocks: 1,
            }
        );
    }

    #[test]
    fn tips_within_visibility() {
        let dag = diamond();
        assert_eq!(dag.tips_within(|id| id.0 == 0), ids(&[0]));
        assert_eq!(dag.tips_within(|id| id.0 <= 1), ids(&[1]));
        assert_eq!(dag.tips_within(|id| id.0 <= 2), ids(&[1, 2]));
        assert_eq!(dag.tips_within(|_| true), ids(&[3]));
    }

    #[test]
    fn first_inclusion_wins() {
        let mut dag = BlockDag::new();
        dag.append_block(block(1, 0, 100.0, &[0], &[7])).unwrap();
        dag.append_block(block(2, 1, 105.0, &[0], &[7])).unwrap();
        let fees = HashMap::from([(TxId(7), 10.0)]);
        let r = dag.settle_rewards(&fees, RewardConfig::default()).unwrap();
        assert_eq!(r[&0], 10.0);
        assert_eq!(r[&1], 0.0);
    }

    #[test]
    fn first_inclusion_orders_by_time_not_id() {
        let mut dag = BlockDag::new();
        dag.append_block(block(1, 0, 9.0, &[0], &[7])).unwrap();
        dag.append_block(block(2, 1, 3.0, &[0], &[7])).unwrap();
        let fees = HashMap::from([(TxId(7), 10.0)]);
        let r = dag.settle_rewards(&fees, RewardConfig::default()).unwrap();
        assert_eq!((r[&0], r[&1]), (0.0, 10.0));
    }

    /// Enumerates both orders of two simultaneous blocks and checks the
    /// lower id is paid regardless of which miner owns it.
    #[test]
    fn simultaneous_blocks_pay_lower_id() {
        for (first_miner, second_miner) in [(0, 1), (1, 0)] {
            let mut dag = BlockDag::new();
            dag.append_block(block(1, first_miner, 50.0, &[0], &[7])).unwrap();
            dag.append_block(block(2, second_miner, 50.0, &[0], &[7])).unwrap();
            let fees = HashMap::from([(TxId(7), 4.0)]);
            let r = dag.settle_rewards(&fees, RewardConfig::default()).unwrap();
            assert_eq!(r[&first_miner], 4.0);
            assert_eq!(r[&second_miner], 0.0);
        }
    }

    #[test]
    fn discount_scales_rewards() {
        let mut dag = BlockDag::new();
        dag.append_block(block(1, 3, 1.0, &[0], &[1])).unwrap();
        let fees = vec![0.0, 10.0];
        let r = dag.settle_rewards(&fees, RewardConfig { discount: 0.5 }).unwrap();
        assert_eq!(r[&3], 5.0);
    }

    #[test]
    fn missing_fee_is_an_error() {
        let mut dag = BlockDag::new();
        dag.append_block(block(1, 0, 1.0, &[0], &[99])).unwrap();
        let fees: HashMap<TxId, f64> = HashMap::new();
        assert_eq!(
            dag.settle_rewards(&fees, RewardConfig::default()),
            Err(DagError::MissingFee(TxId(99)))
        );
    }

    #[test]
    fn dump_format() {
        let mut out = Vec::new();
        diamond().write_dump(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id,miner,mined_at,parents,tx_count");
        assert_eq!(lines[1], "0,-,0,,0");
        assert_eq!(lines[4], "3,0,3,1;2,0");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Random DAG: each new block picks a non-empty subset of the
        /// existing blocks as parents.
        fn parent_choices() -> impl Strategy<Value = Vec<Vec<prop::sample::Index>>> {
            prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 1..4), 0..40)
        }

        fn build(choices: &[Vec<prop::sample::Index>]) -> BlockDag {
            let mut dag = BlockDag::new();
            for (i, parents) in choices.iter().enumerate() {
                let id = (i + 1) as u64;
                let mut ps: Vec<u64> = parents.iter().map(|ix| ix.index(id as usize) as u64).collect();
                ps.sort_unstable();
                ps.dedup();
                dag.append_block(block(id, i % 3, id as f64, &ps, &[])).unwrap();
            }
            dag
        }

        /// Ancestor sets by explicit graph search.
        fn brute_ancestors(dag: &BlockDag) -> Vec<HashSet<u64>> {
            let mut anc: Vec<HashSet<u64>> = Vec::new();
            for b in dag.blocks() {
                let mut set = HashSet::new();
                let mut stack: Vec<u64> = b.parents.iter().map(|p| p.0).collect();
                while let Some(x) = stack.pop() {
                    if set.insert(x) {
                        stack.extend(dag.blocks()[x as usize].parents.iter().map(|p| p.0));
                    }
                }
                anc.push(set);
            }
            anc
        }

        proptest! {
            #[test]
            fn reachability_matches_search(choices in parent_choices()) {
                let dag = build(&choices);
                let anc = brute_ancestors(&dag);
                let n = dag.len() as u64;
                let mut pairs = 0;
                for a in 0..n {
                    prop_assert_eq!(dag.past_size(BlockId(a)).unwrap(), anc[a as usize].len());
                    for b in 0..n {
                        let expected = anc[b as usize].contains(&a);
                        prop_assert_eq!(dag.is_ancestor(BlockId(a), BlockId(b)).unwrap(), expected);
                        let par = dag.is_parallel(BlockId(a), BlockId(b)).unwrap();
                        prop_assert_eq!(par, dag.is_parallel(BlockId(b), BlockId(a)).unwrap());
                        if a < b && par { pairs += 1; }
                    }
                    prop_assert!(!dag.is_parallel(BlockId(a), BlockId(a)).unwrap());
                }
                prop_assert_eq!(dag.parallel_stats().parallel_pairs, pairs);
                prop_assert_eq!(dag.tips_within(|_| true), dag.tips().clone());
            }
        }
    }
}
