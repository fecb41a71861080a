//! Parameter sweeps over many seeded runs, and their CSV output.
//!
//! Every experiment writes the same columns; a column that does not apply
//! to a row holds `NA`. Column order:
//!
//! | column | meaning |
//! |---|---|
//! | `experiment` | `run`, `exp1`, `exp1b`, `exp2` or `exp3` |
//! | `setting` | label of the sweep point, e.g. `m=3`, `alpha=0.2`, `honest/lambda=60` |
//! | `row` | `seed`, `mean` or `stddev` |
//! | `seed` | run seed, `NA` on aggregate rows |
//! | `lambda`, `tau` | block creation time and per-hop delay, seconds |
//! | `blocks`, `miners`, `malicious` | block count, miner count, rational miner count |
//! | `adversarial_power` | total power of rational miners |
//! | `strategies`, `powers` | per-miner vectors joined with `;` (`R` rational, `H` random) |
//! | `topology` | `ring` or `complete` |
//! | `collision_rate` .. `worst_case_collision` | run metrics |
//! | `total_profit` | sum of all rewards |
//! | `honest_*`, `malicious_*` | per-group averages over miners: absolute profit, relative profit, fairness, power-share baseline |
//! | remaining | raw counters |
//!
//! Aggregate rows average each numeric column over the seeds of a setting
//! (`stddev` is the sample standard deviation). Floats are written with six
//! significant digits.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{SimConfig, Strategy};
use crate::dag::BlockDag;
use crate::error::{ConfigError, Error, Result};
use crate::sim::{self, RunReport};

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
pub const DEFAULT_LAMBDAS: [f64; 7] = [10.0, 20.0, 40.0, 60.0, 120.0, 300.0, 600.0];
pub const DEFAULT_ALPHAS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.49];

pub const COLUMNS: [&str; 31] = [
    "experiment",
    "setting",
    "row",
    "seed",
    "lambda",
    "tau",
    "blocks",
    "miners",
    "malicious",
    "adversarial_power",
    "strategies",
    "powers",
    "topology",
    "collision_rate",
    "throughput",
    "parallel_block_rate",
    "worst_case_collision",
    "total_profit",
    "honest_profit",
    "malicious_profit",
    "honest_relative",
    "malicious_relative",
    "honest_fairness",
    "malicious_fairness",
    "honest_baseline",
    "malicious_baseline",
    "duplicate_inclusions",
    "distinct_tx_included",
    "total_tx_included",
    "blocks_with_parallel",
    "txs_generated",
];

/// Index of the first numeric metric column in [`COLUMNS`].
const FIRST_METRIC: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Run,
    Exp1,
    Exp1b,
    Exp2,
    Exp3,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::Exp1 => "exp1",
            Experiment::Exp1b => "exp1b",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which strategy every miner uses in a λ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyMode {
    AllHonest,
    AllMalicious,
    Both,
}

impl StrategyMode {
    fn strategies(self) -> &'static [Strategy] {
        match self {
            StrategyMode::AllHonest => &[Strategy::Random],
            StrategyMode::AllMalicious => &[Strategy::Rational],
            StrategyMode::Both => &[Strategy::Random, Strategy::Rational],
        }
    }
}

/// One point of a sweep, run once per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub label: String,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub experiment: Experiment,
    pub settings: Vec<Setting>,
    pub seeds: Vec<u64>,
}

fn check_seeds(seeds: &[u64]) -> Result<Vec<u64>, ConfigError> {
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() {
        return Err(ConfigError::invalid("seeds", "at least one seed is required"));
    }
    Ok(seeds)
}

fn malicious_sweep(
    experiment: Experiment,
    base: &SimConfig,
    counts: &[usize],
    seeds: &[u64],
) -> Result<Plan, ConfigError> {
    let base = base.clone().with_equal_miners(base.miner_count);
    let settings = counts
        .iter()
        .map(|&m| {
            if m > base.miner_count {
                return Err(ConfigError::invalid(
                    "malicious",
                    format!("count {m} exceeds the {} miners", base.miner_count),
                ));
            }
            Ok(Setting {
                label: format!("m={m}"),
                config: base.clone().with_malicious(m),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(Plan {
        experiment,
        settings,
        seeds: check_seeds(seeds)?,
    })
}

impl Plan {
    /// A single configuration over `seeds`.
    pub fn single(base: &SimConfig, seeds: &[u64]) -> Result<Plan, ConfigError> {
        base.validate()?;
        Ok(Plan {
            experiment: Experiment::Run,
            settings: vec![Setting {
                label: "single".into(),
                config: base.clone(),
            }],
            seeds: check_seeds(seeds)?,
        })
    }

    /// Profit per miner group as the number of rational miners varies. Miners
    /// get equal power; the first `m` on the ring are rational.
    pub fn exp1(base: &SimConfig, counts: &[usize], seeds: &[u64]) -> Result<Plan, ConfigError> {
        malicious_sweep(Experiment::Exp1, base, counts, seeds)
    }

    /// Collision rate and throughput as the number of rational miners varies.
    pub fn exp2(base: &SimConfig, counts: &[usize], seeds: &[u64]) -> Result<Plan, ConfigError> {
        malicious_sweep(Experiment::Exp2, base, counts, seeds)
    }

    /// Two miners: a rational one with power `alpha` and a random one with
    /// the rest.
    pub fn exp1b(base: &SimConfig, alphas: &[f64], seeds: &[u64]) -> Result<Plan, ConfigError> {
        let settings = alphas
            .iter()
            .map(|&alpha| {
                if !(alpha > 0.0 && alpha <= 0.49) {
                    return Err(ConfigError::invalid(
                        "alpha",
                        format!("{alpha} is outside (0, 0.49]"),
                    ));
                }
                let mut config = base.clone().with_equal_miners(2);
                config.miner_powers = vec![alpha, 1.0 - alpha];
                config.miner_strategies = vec![Strategy::Rational, Strategy::Random];
                Ok(Setting {
                    label: format!("alpha={}", format_sig(alpha)),
                    config,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Plan {
            experiment: Experiment::Exp1b,
            settings,
            seeds: check_seeds(seeds)?,
        })
    }

    /// λ sweep with every miner honest, every miner rational, or both.
    pub fn exp3(
        base: &SimConfig,
        lambdas: &[f64],
        mode: StrategyMode,
        seeds: &[u64],
    ) -> Result<Plan, ConfigError> {
        let mut settings = Vec::new();
        for &strategy in mode.strategies() {
            for &lambda in lambdas {
                if !(10.0..=600.0).contains(&lambda) {
                    return Err(ConfigError::invalid(
                        "block_creation_time (λ)",
                        format!("{lambda} is outside [10, 600]"),
                    ));
                }
                let mut config = base.clone().with_lambda(lambda);
                config.miner_strategies = vec![strategy; config.miner_count];
                let group = match strategy {
                    Strategy::Random => "honest",
                    Strategy::Rational => "malicious",
                };
                settings.push(Setting {
                    label: format!("{group}/lambda={}", format_sig(lambda)),
                    config,
                });
            }
        }
        Ok(Plan {
            experiment: Experiment::Exp3,
            settings,
            seeds: check_seeds(seeds)?,
        })
    }

    pub fn with_blocks(mut self, blocks: u64) -> Self {
        for s in &mut self.settings {
            s.config.total_blocks = blocks;
        }
        self
    }

    /// All `(setting, seed)` runs in output order.
    pub fn jobs(&self) -> Vec<(usize, SimConfig)> {
        self.settings
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                self.seeds
                    .iter()
                    .map(move |&seed| (i, s.config.clone().with_seed(seed)))
            })
            .collect()
    }

    /// Runs every job on up to `workers` threads. Output does not depend on
    /// `workers`.
    pub fn run(&self, workers: usize) -> Result<Results> {
        self.run_with_dumps(workers, None)
    }

    /// Like [`Plan::run`], also writing each run's DAG into `dump_dir` as
    /// `<setting>-seed<seed>.csv`.
    pub fn run_with_dumps(&self, workers: usize, dump_dir: Option<&Path>) -> Result<Results> {
        for s in &self.settings {
            s.config.validate()?;
        }
        let jobs: Vec<Job> = self
            .jobs()
            .into_iter()
            .map(|(setting, config)| Job {
                dump: dump_dir.map(|dir| {
                    let label = self.settings[setting].label.replace(['/', '='], "_");
                    dir.join(format!("{label}-seed{}.csv", config.seed))
                }),
                setting,
                config,
            })
            .collect();
        let reports = run_all(&jobs, workers)?;
        let runs = jobs
            .into_iter()
            .zip(reports)
            .map(|(job, report)| SeedRun {
                setting: job.setting,
                summary: RunSummary::new(&job.config, &report),
                config: job.config,
                report,
            })
            .collect();
        Ok(Results {
            experiment: self.experiment,
            labels: self.settings.iter().map(|s| s.label.clone()).collect(),
            runs,
        })
    }
}

struct Job {
    setting: usize,
    config: SimConfig,
    dump: Option<PathBuf>,
}

impl Job {
    fn execute(&self) -> Result<RunReport> {
        match &self.dump {
            None => Ok(sim::run(&self.config)?),
            Some(path) => {
                let out = sim::simulate(&self.config)?;
                write_dag_dump(&out.dag, path)?;
                Ok(out.report)
            }
        }
    }
}

/// Writes the DAG dump of a run to `path`.
pub fn write_dag_dump(dag: &BlockDag, path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    dag.write_dump(&mut file)?;
    file.flush()?;
    Ok(())
}

#[cfg(feature = "parallel")]
fn run_all(jobs: &[Job], workers: usize) -> Result<Vec<RunReport>> {
    use rayon::prelude::*;
    if workers == 0 {
        return Err(Error::Workers("worker count must be at least 1".into()));
    }
    if workers == 1 {
        return jobs.iter().map(Job::execute).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Workers(e.to_string()))?;
    pool.install(|| jobs.par_iter().map(Job::execute).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_all(jobs: &[Job], workers: usize) -> Result<Vec<RunReport>> {
    if workers == 0 {
        return Err(Error::Workers("worker count must be at least 1".into()));
    }
    jobs.iter().map(Job::execute).collect()
}

/// Per-group averages derived from one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub collision_rate: f64,
    pub throughput: Option<f64>,
    pub parallel_block_rate: f64,
    pub worst_case_collision: f64,
    pub total_profit: f64,
    pub honest: Option<GroupProfit>,
    pub malicious: Option<GroupProfit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupProfit {
    /// Mean absolute reward per miner of the group.
    pub profit: f64,
    pub relative: f64,
    pub fairness: f64,
    /// Mean reward a miner of the group would get if paid by power share.
    pub baseline: f64,
}

impl RunSummary {
    pub fn new(config: &SimConfig, report: &RunReport) -> Self {
        let total = report.total_profit();
        let group = |strategy: Strategy| {
            let members: Vec<usize> = (0..config.miner_count)
                .filter(|&i| config.miner_strategies[i] == strategy)
                .collect();
            if members.is_empty() {
                return None;
            }
            let n = members.len() as f64;
            let mean = |f: &dyn Fn(usize) -> f64| members.iter().map(|&i| f(i)).sum::<f64>() / n;
            let profit = |i: usize| report.per_miner_profit[i];
            let relative = |i: usize| if total > 0.0 { profit(i) / total } else { f64::NAN };
            Some(GroupProfit {
                profit: mean(&profit),
                relative: mean(&relative),
                fairness: mean(&|i| relative(i) / config.miner_powers[i]),
                baseline: mean(&|i| config.miner_powers[i] * total),
            })
        };
        RunSummary {
            collision_rate: report.collision_rate(),
            throughput: report.throughput(),
            parallel_block_rate: report.parallel_block_rate(),
            worst_case_collision: report.worst_case_collision(),
            total_profit: total,
            honest: group(Strategy::Random),
            malicious: group(Strategy::Rational),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub setting: usize,
    pub config: SimConfig,
    pub report: RunReport,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Results {
    pub experiment: Experiment,
    pub labels: Vec<String>,
    /// Sorted by `(setting, seed)`.
    pub runs: Vec<SeedRun>,
}

impl Results {
    pub fn runs_of(&self, setting: usize) -> impl Iterator<Item = &SeedRun> {
        self.runs.iter().filter(move |r| r.setting == setting)
    }

    /// Mean of `f` over the seeds of `setting`; `None` if any seed lacks a
    /// value.
    pub fn mean(&self, setting: usize, f: impl Fn(&RunSummary) -> Option<f64>) -> Option<f64> {
        let values: Option<Vec<f64>> = self.runs_of(setting).map(|r| f(&r.summary)).collect();
        let values = values?;
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    /// Seed-mean of `f` for every setting, in sweep order.
    pub fn means(&self, f: impl Fn(&RunSummary) -> Option<f64> + Copy) -> Vec<Option<f64>> {
        (0..self.labels.len()).map(|i| self.mean(i, f)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (i, label) in self.labels.iter().enumerate() {
            let runs: Vec<&SeedRun> = self.runs_of(i).collect();
            let per_seed: Vec<Vec<Value>> = runs.iter().map(|r| metric_values(&r.summary, &r.report)).collect();
            for (run, values) in runs.iter().zip(&per_seed) {
                let mut row = echo(self.experiment, label, "seed", Some(run.config.seed), &run.config);
                row.extend(values.iter().map(Value::render));
                rows.push(row);
            }
            if let Some(first) = runs.first() {
                for (kind, stat) in [("mean", mean_of as fn(&[f64]) -> Option<f64>), ("stddev", stddev_of)] {
                    let mut row = echo(self.experiment, label, kind, None, &first.config);
                    for col in 0..per_seed[0].len() {
                        let column: Option<Vec<f64>> = per_seed.iter().map(|v| v[col].as_f64()).collect();
                        let value = column.and_then(|c| stat(&c)).map_or(Value::Na, Value::Float);
                        row.push(value.render());
                    }
                    rows.push(row);
                }
            }
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(COLUMNS)?;
        for row in self.rows() {
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// The CSV row of a single run.
pub fn run_row(config: &SimConfig, report: &RunReport) -> Vec<String> {
    let mut row = echo(Experiment::Run, "single", "seed", Some(config.seed), config);
    row.extend(metric_values(&RunSummary::new(config, report), report).iter().map(Value::render));
    row
}

/// Writes the header and one run's row.
pub fn write_run_csv<W: Write>(out: W, config: &SimConfig, report: &RunReport) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(COLUMNS)?;
    writer.write_record(run_row(config, report))?;
    writer.flush()?;
    Ok(())
}

/// Appends one run's row to a CSV file, writing the header first if the
/// file is new or empty.
pub fn append_run_row(path: &Path, config: &SimConfig, report: &RunReport) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let fresh = file.metadata()?.len() == 0;
    let mut writer = csv::Writer::from_writer(file);
    if fresh {
        writer.write_record(COLUMNS)?;
    }
    writer.write_record(run_row(config, report))?;
    writer.flush()?;
    Ok(())
}

fn echo(experiment: Experiment, label: &str, kind: &str, seed: Option<u64>, cfg: &SimConfig) -> Vec<String> {
    let strategies: Vec<&str> = cfg
        .miner_strategies
        .iter()
        .map(|s| match s {
            Strategy::Random => "H",
            Strategy::Rational => "R",
        })
        .collect();
    let powers: Vec<String> = cfg.miner_powers.iter().map(|&p| format_sig(p)).collect();
    vec![
        experiment.to_string(),
        label.to_string(),
        kind.to_string(),
        seed.map_or_else(|| "NA".to_string(), |s| s.to_string()),
        format_sig(cfg.block_creation_time),
        format_sig(cfg.propagation_delay),
        cfg.total_blocks.to_string(),
        cfg.miner_count.to_string(),
        cfg.malicious_count().to_string(),
        format_sig(cfg.adversarial_power()),
        strategies.join(";"),
        powers.join(";"),
        cfg.topology.to_string(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Int(u64),
    Float(f64),
    Na,
}

impl Value {
    fn opt(x: Option<f64>) -> Value {
        x.filter(|v| v.is_finite()).map_or(Value::Na, Value::Float)
    }

    fn as_f64(self) -> Option<f64> {
        match self {
            Value::Int(n) => Some(n as f64),
            Value::Float(x) => Some(x),
            Value::Na => None,
        }
    }

    fn render(&self) -> String {
        match *self {
            Value::Int(n) => n.to_string(),
            Value::Float(x) => format_sig(x),
            Value::Na => "NA".to_string(),
        }
    }
}

fn metric_values(s: &RunSummary, r: &RunReport) -> Vec<Value> {
    let g = |group: Option<GroupProfit>, f: fn(&GroupProfit) -> f64| Value::opt(group.as_ref().map(f));
    let values = vec![
        Value::Float(s.collision_rate),
        Value::opt(s.throughput),
        Value::Float(s.parallel_block_rate),
        Value::Float(s.worst_case_collision),
        Value::Float(s.total_profit),
        g(s.honest, |p| p.profit),
        g(s.malicious, |p| p.profit),
        g(s.honest, |p| p.relative),
        g(s.malicious, |p| p.relative),
        g(s.honest, |p| p.fairness),
        g(s.malicious, |p| p.fairness),
        g(s.honest, |p| p.baseline),
        g(s.malicious, |p| p.baseline),
        Value::Int(r.duplicate_inclusions),
        Value::Int(r.distinct_tx_included),
        Value::Int(r.total_tx_included),
        Value::Int(r.blocks_with_parallel),
        Value::Int(r.txs_generated),
    ];
    debug_assert_eq!(FIRST_METRIC + values.len(), COLUMNS.len());
    values
}

fn mean_of(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn stddev_of(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let mean = mean_of(xs)?;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some(var.sqrt())
}

/// Formats `x` with six significant digits, trailing zeros trimmed.
/// Very large or small magnitudes use exponent notation.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return "NA".into();
    }
    // Round first so the exponent reflects carries like 9.999996 -> 10.
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..=15).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let rounded: f64 = sci.parse().expect("float");
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{rounded:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
