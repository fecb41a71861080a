//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function takes a JSON object of [`DemoParams`] and returns
//! a JSON string. The `*_json` functions hold the logic and run natively too.

use dagsim::experiment::RunSummary;
use dagsim::{simulate, SimConfig, Strategy, TopologyKind};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Largest run the page accepts, to keep the tab responsive.
pub const MAX_BLOCKS: u64 = 2_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoParams {
    pub miners: usize,
    pub malicious: usize,
    pub lambda: f64,
    pub tau: f64,
    pub blocks: u64,
    pub block_capacity: usize,
    pub mempool_capacity: usize,
    pub topology: TopologyKind,
    pub seed: u64,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            miners: 10,
            malicious: 1,
            lambda: 20.0,
            tau: 5.0,
            blocks: 300,
            block_capacity: 20,
            mempool_capacity: 1_000,
            topology: TopologyKind::Ring,
            seed: 1,
        }
    }
}

impl DemoParams {
    fn config(&self) -> Result<SimConfig, String> {
        if self.blocks > MAX_BLOCKS {
            return Err(format!("at most {MAX_BLOCKS} blocks in the browser"));
        }
        if self.malicious > self.miners {
            return Err(format!("{} malicious miners but only {} miners", self.malicious, self.miners));
        }
        let mut cfg = SimConfig::default()
            .with_equal_miners(self.miners)
            .with_malicious(self.malicious)
            .with_lambda(self.lambda)
            .with_blocks(self.blocks)
            .with_seed(self.seed);
        cfg.propagation_delay = self.tau;
        cfg.block_capacity = self.block_capacity;
        cfg.mempool_capacity = self.mempool_capacity;
        cfg.topology = self.topology;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn parse(params: &str) -> Result<DemoParams, String> {
    if params.trim().is_empty() {
        return Ok(DemoParams::default());
    }
    serde_json::from_str(params).map_err(|e| format!("bad parameters: {e}"))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct MinerRow {
    pub miner: usize,
    pub strategy: Strategy,
    pub blocks: u64,
    pub profit: f64,
    pub fairness: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub blocks: u64,
    pub collision_rate: f64,
    pub throughput: Option<f64>,
    pub parallel_block_rate: f64,
    pub worst_case_collision: f64,
    pub malicious_over_honest: Option<f64>,
    pub miners: Vec<MinerRow>,
}

/// One run: headline metrics and a per-miner profit table.
pub fn simulate_json(params: &str) -> Result<String, String> {
    let cfg = parse(params)?.config()?;
    let out = simulate(&cfg).map_err(|e| e.to_string())?;
    let r = &out.report;
    let s = RunSummary::new(&cfg, r);
    let total = r.total_profit();
    let miners = (0..cfg.miner_count)
        .map(|i| MinerRow {
            miner: i,
            strategy: cfg.miner_strategies[i],
            blocks: r.per_miner_blocks[i],
            profit: r.per_miner_profit[i],
            fairness: r.per_miner_profit[i] / total / cfg.miner_powers[i],
        })
        .collect();
    to_json(&Summary {
        blocks: r.total_blocks,
        collision_rate: s.collision_rate,
        throughput: s.throughput,
        parallel_block_rate: s.parallel_block_rate,
        worst_case_collision: s.worst_case_collision,
        malicious_over_honest: s.malicious.zip(s.honest).map(|(m, h)| m.profit / h.profit),
        miners,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub honest_collision: f64,
    pub malicious_collision: f64,
    pub parallel_block_rate: f64,
}

/// Collision rate with every miner honest and with every miner rational,
/// for each block creation time in `lambdas`.
pub fn lambda_sweep_json(params: &str, lambdas: &[f64]) -> Result<String, String> {
    let base = parse(params)?;
    let points = lambdas
        .iter()
        .map(|&lambda| {
            let run_with = |malicious: usize| {
                let p = DemoParams {
                    lambda,
                    malicious,
                    ..base.clone()
                };
                simulate(&p.config()?).map_err(|e| e.to_string()).map(|o| o.report)
            };
            let honest = run_with(0)?;
            let malicious = run_with(base.miners)?;
            Ok(SweepPoint {
                lambda,
                honest_collision: honest.collision_rate(),
                malicious_collision: malicious.collision_rate(),
                parallel_block_rate: honest.parallel_block_rate(),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&points)
}

#[derive(Debug, Serialize)]
pub struct DagNode {
    pub id: u64,
    pub miner: Option<usize>,
    pub time: f64,
    pub parents: Vec<u64>,
    pub malicious: bool,
    /// Transactions that were already in an earlier block.
    pub duplicates: usize,
    pub parallel: bool,
}

/// The mined DAG, for drawing. Capped at 200 blocks.
pub fn dag_json(params: &str) -> Result<String, String> {
    let mut p = parse(params)?;
    p.blocks = p.blocks.min(200);
    let cfg = p.config()?;
    let out = simulate(&cfg).map_err(|e| e.to_string())?;
    let mut seen = std::collections::HashSet::new();
    let mut duplicates = vec![0; out.dag.len()];
    for b in out.dag.mined_in_time_order() {
        duplicates[b.id.0 as usize] = b.txs.iter().filter(|tx| !seen.insert(**tx)).count();
    }
    let ids: Vec<_> = out.dag.blocks().iter().map(|b| b.id).collect();
    let nodes: Vec<DagNode> = out
        .dag
        .blocks()
        .iter()
        .map(|b| DagNode {
            id: b.id.0,
            miner: b.miner,
            time: b.mined_at,
            parents: b.parents.iter().map(|p| p.0).collect(),
            malicious: b.miner.is_some_and(|m| cfg.miner_strategies[m] == Strategy::Rational),
            duplicates: duplicates[b.id.0 as usize],
            parallel: !b.is_genesis()
                && ids
                    .iter()
                    .any(|&o| o.0 != 0 && out.dag.is_parallel(b.id, o).unwrap_or(false)),
        })
        .collect();
    to_json(&nodes)
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(params: &str) -> Result<String, JsValue> {
    simulate_json(params).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = lambdaSweep)]
pub fn lambda_sweep_js(params: &str, lambdas: Vec<f64>) -> Result<String, JsValue> {
    lambda_sweep_json(params, &lambdas).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = dag)]
pub fn dag_js(params: &str) -> Result<String, JsValue> {
    dag_json(params).map_err(|e| JsValue::from_str(&e))
}
