//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. Sweep
//! CSVs are written next to the test binary's scratch directory.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::time::Instant;

use dagsim::dag::{Block, BlockDag, RewardConfig};
use dagsim::experiment::{Plan, Results, RunSummary, StrategyMode, DEFAULT_ALPHAS, DEFAULT_LAMBDAS, DEFAULT_SEEDS};
use dagsim::mempool::{Mempool, Transaction};
use dagsim::metrics::{collision_rate, throughput};
use dagsim::workload::{TxGenerator, WorkloadConfig};
use dagsim::{BlockId, SimConfig, TxId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Blocks per run for the λ sweep.
const LAMBDA_SWEEP_BLOCKS: u64 = 3_000;

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, name: &'static str, checks: Vec<(bool, String)>) -> Outcome {
    let pass = checks.iter().all(|(ok, _)| *ok);
    let detail = checks
        .into_iter()
        .map(|(ok, d)| if ok { d } else { format!("FAILED {d}") })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { id, name, pass, detail }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(usize::from).unwrap_or(1)
}

fn scratch_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn save(results: &Results, name: &str) {
    let path = scratch_dir().join(name);
    std::fs::write(&path, results.to_csv_string().expect("csv")).expect("write csv");
    eprintln!("  wrote {}", path.display());
}

fn fmt_series(xs: &[Option<f64>]) -> String {
    let parts: Vec<String> = xs
        .iter()
        .map(|x| x.map_or("NA".into(), |v| format!("{v:.4}")))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn honest_profit(s: &RunSummary) -> Option<f64> {
    s.honest.map(|g| g.profit)
}

fn malicious_profit(s: &RunSummary) -> Option<f64> {
    s.malicious.map(|g| g.profit)
}

fn profit_attack(sweep: &Results, m1: usize) -> Outcome {
    let honest = sweep.mean(m1, honest_profit).unwrap_or(f64::NAN);
    let malicious = sweep.mean(m1, malicious_profit).unwrap_or(f64::NAN);
    let ratio = malicious / honest;
    outcome(
        "A1",
        "profit attack",
        vec![(
            (1.5..=3.0).contains(&ratio),
            format!("malicious/honest mean profit = {ratio:.3} (want [1.5, 3.0])"),
        )],
    )
}

fn diminishing_advantage(sweep: &Results, counts: &[usize]) -> Outcome {
    let points: Vec<(usize, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &m)| (1..=9).contains(&m))
        .map(|(i, &m)| (m, sweep.mean(i, malicious_profit).unwrap_or(f64::NAN)))
        .collect();
    let checks = points
        .windows(2)
        .map(|w| {
            let ((a, pa), (b, pb)) = (w[0], w[1]);
            (
                pb <= pa * 1.05,
                format!("m={a}->{b}: {:.4e} -> {:.4e}", pa, pb),
            )
        })
        .collect();
    outcome("A2", "diminishing advantage", checks)
}

fn collision_sweep(sweep: &Results) -> Outcome {
    let collision = sweep.means(|s| Some(s.collision_rate));
    let thr = sweep.means(|s| s.throughput);
    let mut checks = Vec::new();
    let non_decreasing = collision.windows(2).all(|w| w[1] >= w[0]);
    checks.push((non_decreasing, format!("collision means non-decreasing {}", fmt_series(&collision))));
    let non_increasing = thr.windows(2).all(|w| w[1] <= w[0]);
    checks.push((non_increasing, format!("throughput means non-increasing {}", fmt_series(&thr))));
    let honest = collision[0].unwrap_or(f64::NAN);
    checks.push((honest < 0.01, format!("all-honest collision {honest:.5} < 0.01")));
    let violations = sweep
        .runs
        .iter()
        .filter(|r| r.summary.collision_rate > r.summary.worst_case_collision)
        .count();
    checks.push((violations == 0, format!("{violations} runs above worst case")));
    outcome("A4", "collision and throughput", checks)
}

fn alpha_sweep() -> Outcome {
    let base = SimConfig::default();
    let plan = Plan::exp1b(&base, &DEFAULT_ALPHAS, &DEFAULT_SEEDS).expect("valid sweep");
    let res = plan.run(workers()).expect("runs");
    save(&res, "exp1b.csv");
    let relative = res.means(|s| s.malicious.map(|g| g.relative));
    let fairness = res.means(|s| s.malicious.map(|g| g.fairness));
    let increasing = relative.windows(2).all(|w| w[1] > w[0]);
    let fair = fairness.iter().all(|f| f.is_some_and(|f| f > 1.0));
    outcome(
        "A3",
        "alpha sweep",
        vec![
            (increasing, format!("rational relative profit strictly increasing {}", fmt_series(&relative))),
            (fair, format!("fairness > 1 at every alpha {}", fmt_series(&fairness))),
        ],
    )
}

fn lambda_sweep() -> (Outcome, Outcome) {
    let base = SimConfig::default().with_blocks(LAMBDA_SWEEP_BLOCKS);
    let plan = Plan::exp3(&base, &DEFAULT_LAMBDAS, StrategyMode::Both, &DEFAULT_SEEDS).expect("valid sweep");
    let res = plan.run(workers()).expect("runs");
    save(&res, "exp3.csv");
    let n = DEFAULT_LAMBDAS.len();
    let collision = res.means(|s| Some(s.collision_rate));
    let (honest, malicious) = collision.split_at(n);
    let m10 = malicious[0].unwrap_or(f64::NAN);
    let m600 = malicious[n - 1].unwrap_or(f64::NAN);
    let honest_max = honest.iter().flatten().copied().fold(0.0, f64::max);
    let a5 = outcome(
        "A5",
        "lambda sensitivity",
        vec![
            (
                m10 >= 5.0 * m600,
                format!("all-malicious collision λ=10 {m10:.5} vs λ=600 {m600:.5} (x{:.1}, want >= 5)", m10 / m600),
            ),
            (
                honest_max < 0.01,
                format!("all-honest collision < 0.01 over the grid {}", fmt_series(honest)),
            ),
        ],
    );
    // Parallel-block rate of the all-honest runs.
    let parallel = res.means(|s| Some(s.parallel_block_rate));
    let parallel = &parallel[..n];
    let monotone = parallel.windows(2).all(|w| w[1] <= w[0]);
    let at600 = parallel[n - 1].unwrap_or(f64::NAN);
    let a6 = outcome(
        "A6",
        "parallel block rate curve",
        vec![
            (monotone, format!("non-increasing in λ {}", fmt_series(parallel))),
            (
                (0.001..=0.03).contains(&at600),
                format!("λ=600 rate {at600:.5} (want [0.001, 0.03])"),
            ),
        ],
    );
    (a5, a6)
}

fn statistical_checks(sweep: &Results, m1: usize) -> Outcome {
    let mut checks = Vec::new();

    // Block inter-arrival over a 10⁴-block run at the default λ.
    let run = sweep.runs_of(m1).next().expect("a run");
    let r = &run.report;
    let mean_gap = (r.last_block_at - r.mining_started_at) / r.total_blocks as f64;
    let lambda = run.config.block_creation_time;
    checks.push((
        (mean_gap / lambda - 1.0).abs() <= 0.03,
        format!("mean block interval {mean_gap:.3}s over {} blocks (λ={lambda})", r.total_blocks),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut gen = TxGenerator::new(WorkloadConfig {
        tx_gen_rate: 10.0,
        fee_mean: 150.0,
        node_count: 10,
    });
    let n = 1_000_000;
    let mean_fee = (0..n).map(|_| gen.next_tx(&mut rng, 0.0).tx.fee).sum::<f64>() / n as f64;
    checks.push(((mean_fee / 150.0 - 1.0).abs() <= 0.01, format!("mean fee {mean_fee:.3} over 10^6 draws")));

    let pool_size = 50;
    let mut pool = Mempool::new(pool_size);
    for i in 0..pool_size as u64 {
        pool.insert(Transaction {
            id: TxId(i),
            fee: 1.0 + i as f64,
            created_at: 0.0,
        });
    }
    let (k, trials) = (5, 20_000);
    let mut counts = vec![0u64; pool_size];
    for _ in 0..trials {
        for tx in pool.select_random(k, &mut rng) {
            counts[tx.id.0 as usize] += 1;
        }
    }
    let expected = (k * trials) as f64 / pool_size as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((pool_size - 1) as f64).unwrap().cdf(chi2);
    checks.push((p > 0.01, format!("random selection chi-square p = {p:.3}")));
    outcome("A7", "statistical model checks", checks)
}

/// Random DAG of up to 6 mined blocks with at most `cap` transactions each,
/// plus integer fees for every transaction.
fn random_dag(rng: &mut ChaCha8Rng) -> (BlockDag, Vec<f64>, usize) {
    let cap = rng.random_range(1..=3);
    let n = rng.random_range(1..=6);
    let universe = rng.random_range(1..=8u64);
    let fees: Vec<f64> = (0..universe).map(|_| rng.random_range(1..=20) as f64).collect();
    let mut dag = BlockDag::new();
    let mut times = vec![0.0];
    let mut t = 0.0;
    for i in 1..=n {
        // Ties in time are allowed; parents must be strictly earlier.
        if rng.random_bool(0.7) {
            t += 1.0;
        }
        let earlier: Vec<u64> = (0..i as u64).filter(|&b| b == 0 || times[b as usize] < t).collect();
        let mut parents: Vec<u64> = earlier
            .iter()
            .copied()
            .filter(|_| rng.random_bool(0.5))
            .collect();
        if parents.is_empty() {
            parents.push(*earlier.last().unwrap());
        }
        let mut txs: Vec<u64> = (0..universe).collect();
        txs.shuffle(rng);
        txs.truncate(rng.random_range(0..=cap.min(universe as usize)));
        dag.append_block(Block {
            id: BlockId(i as u64),
            miner: Some(rng.random_range(0..3)),
            mined_at: t,
            parents: parents.into_iter().map(BlockId).collect(),
            txs: txs.into_iter().map(TxId).collect(),
        })
        .expect("well-formed block");
        times.push(t);
    }
    (dag, fees, cap)
}

fn brute_force_metrics(dag: &BlockDag, cap: usize) -> (f64, Option<f64>) {
    let mut count: HashMap<TxId, u64> = HashMap::new();
    let mut blocks = 0u64;
    for b in dag.blocks().iter().filter(|b| !b.is_genesis()) {
        blocks += 1;
        for tx in &b.txs {
            *count.entry(*tx).or_default() += 1;
        }
    }
    let total: u64 = count.values().sum();
    let dup: u64 = count.values().map(|c| c - 1).sum();
    let thr = (total > 0).then(|| count.len() as f64 / total as f64);
    (dup as f64 / (blocks * cap as u64) as f64, thr)
}

fn brute_force_rewards(dag: &BlockDag, fees: &[f64], discount: f64) -> BTreeMap<usize, f64> {
    let mined: Vec<&Block> = dag.blocks().iter().filter(|b| !b.is_genesis()).collect();
    let mut rewards: BTreeMap<usize, f64> = mined.iter().map(|b| (b.miner.unwrap(), 0.0)).collect();
    for tx in 0..fees.len() as u64 {
        let first = mined
            .iter()
            .filter(|b| b.txs.contains(&TxId(tx)))
            .min_by(|a, b| a.mined_at.total_cmp(&b.mined_at).then(a.id.cmp(&b.id)));
        if let Some(b) = first {
            *rewards.get_mut(&b.miner.unwrap()).unwrap() += fees[tx as usize] * discount;
        }
    }
    rewards
}

/// Best `k`-subset by total fee; ties go to the smallest sorted id list.
fn brute_force_top(txs: &[Transaction], k: usize) -> Vec<TxId> {
    let n = txs.len();
    let mut best: Option<(f64, Vec<TxId>)> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let chosen: Vec<&Transaction> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &txs[i]).collect();
        let sum: f64 = chosen.iter().map(|t| t.fee).sum();
        let mut ids: Vec<TxId> = chosen.iter().map(|t| t.id).collect();
        ids.sort();
        let better = match &best {
            None => true,
            Some((s, b)) => sum > *s || (sum == *s && ids < *b),
        };
        if better {
            best = Some((sum, ids));
        }
    }
    best.map(|(_, ids)| ids).unwrap_or_default()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases = 3_000;
    let mut mismatches = Vec::new();
    for case in 0..cases {
        let (dag, fees, cap) = random_dag(&mut rng);
        let (coll, thr) = brute_force_metrics(&dag, cap);
        if collision_rate(&dag, cap).ok() != Some(coll) || throughput(&dag).ok() != thr {
            mismatches.push(format!("metrics case {case}"));
        }
        for discount in [1.0, 0.5] {
            let got = dag.settle_rewards(&fees, RewardConfig { discount }).expect("fees known");
            if got != brute_force_rewards(&dag, &fees, discount) {
                mismatches.push(format!("rewards case {case}"));
            }
        }
    }
    let mut top_cases = 0;
    for case in 0..cases {
        let size = rng.random_range(0..=12);
        let mut pool = Mempool::new(12);
        let txs: Vec<Transaction> = (0..size)
            .map(|i| Transaction {
                id: TxId(rng.random_range(0..1000) * 100 + i),
                fee: rng.random_range(1..=6) as f64,
                created_at: 0.0,
            })
            .collect();
        for tx in &txs {
            pool.insert(*tx);
        }
        for k in 0..=size as usize {
            top_cases += 1;
            let mut got: Vec<TxId> = pool.select_top_fee(k).iter().map(|t| t.id).collect();
            got.sort();
            if got != brute_force_top(&txs, k) {
                mismatches.push(format!("top-fee case {case} k={k}"));
            }
        }
    }
    mismatches.truncate(5);
    outcome(
        "A8",
        "oracle equivalence",
        vec![(
            mismatches.is_empty(),
            format!(
                "{cases} random DAGs (<= 6 blocks, capacity <= 3) and {top_cases} top-fee selections; mismatches: {mismatches:?}"
            ),
        )],
    )
}

fn determinism() -> Outcome {
    let mut base = SimConfig::default().with_blocks(150);
    base.block_capacity = 10;
    base.mempool_capacity = 300;
    let seeds = [3, 1];
    let plans = [
        Plan::single(&base, &seeds).unwrap(),
        Plan::exp1(&base, &[0, 1, 10], &seeds).unwrap(),
        Plan::exp1b(&base, &[0.1, 0.49], &seeds).unwrap(),
        Plan::exp2(&base, &[2, 5], &seeds).unwrap(),
        Plan::exp3(&base, &[10.0, 600.0], StrategyMode::Both, &seeds).unwrap(),
    ];
    let checks = plans
        .iter()
        .map(|plan| {
            let a = plan.run(1).unwrap().to_csv_string().unwrap();
            let b = plan.run(2).unwrap().to_csv_string().unwrap();
            (a == b, format!("{} {} bytes", plan.experiment, a.len()))
        })
        .collect();
    outcome("A9", "determinism", checks)
}

fn main() {
    let start = Instant::now();
    let mut outcomes = Vec::new();

    eprintln!("malicious-count sweep, 10000 blocks x 5 seeds x 11 settings");
    let counts: Vec<usize> = (0..=10).collect();
    let sweep = Plan::exp1(&SimConfig::default(), &counts, &DEFAULT_SEEDS)
        .expect("valid sweep")
        .run(workers())
        .expect("runs");
    save(&sweep, "exp1.csv");
    let m1 = counts.iter().position(|&m| m == 1).unwrap();
    outcomes.push(profit_attack(&sweep, m1));
    outcomes.push(diminishing_advantage(&sweep, &counts));

    eprintln!("alpha sweep");
    outcomes.push(alpha_sweep());

    outcomes.push(collision_sweep(&sweep));

    eprintln!("lambda sweep, {LAMBDA_SWEEP_BLOCKS} blocks x 5 seeds x 14 settings");
    let (a5, a6) = lambda_sweep();
    outcomes.push(a5);
    outcomes.push(a6);

    outcomes.push(statistical_checks(&sweep, m1));
    outcomes.push(oracle_equivalence());
    outcomes.push(determinism());

    println!();
    for o in &outcomes {
        println!(
            "{} {:<28} {}  {}",
            o.id,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!(
        "\n{} of {} criteria passed in {:.0}s",
        outcomes.len() - failed.len(),
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
