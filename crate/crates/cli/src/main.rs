use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dagsim::experiment::{self, Plan, StrategyMode, DEFAULT_ALPHAS, DEFAULT_LAMBDAS, DEFAULT_SEEDS};
use dagsim::SimConfig;

/// Block-DAG transaction selection simulator.
#[derive(Parser)]
#[command(name = "dagsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and append its row to the output CSV.
    Run(Common),
    /// Profit per honest and malicious miner as the malicious count varies.
    Exp1 {
        #[command(flatten)]
        common: Common,
        /// Malicious miner counts.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
    },
    /// Two miners, rational power alpha against random power 1 - alpha.
    Exp1b {
        #[command(flatten)]
        common: Common,
        /// Rational miner powers, each in (0, 0.49].
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
    },
    /// Collision rate and throughput as the malicious count varies.
    Exp2 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
    },
    /// Block creation time sweep with all miners honest and/or malicious.
    Exp3 {
        #[command(flatten)]
        common: Common,
        /// Block creation times in seconds, each in [10, 600].
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "both")]
        mode: Mode,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV. Experiments overwrite it, `run` appends. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Blocks per run.
    #[arg(long)]
    blocks: Option<u64>,
    /// Runs executed concurrently.
    #[arg(long)]
    workers: Option<usize>,
    /// DAG dump: a file for `run`, a directory for experiments.
    #[arg(long)]
    dump_dag: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    AllHonest,
    AllMalicious,
    Both,
}

impl From<Mode> for StrategyMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::AllHonest => StrategyMode::AllHonest,
            Mode::AllMalicious => StrategyMode::AllMalicious,
            Mode::Both => StrategyMode::Both,
        }
    }
}

impl Common {
    fn base_config(&self) -> anyhow::Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::from_path(path)?,
            None => SimConfig::default(),
        };
        if let Some(blocks) = self.blocks {
            cfg.total_blocks = blocks;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec())
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(usize::from)
                .unwrap_or(1)
        })
    }
}

fn run_single(common: &Common) -> anyhow::Result<()> {
    let base = common.base_config()?;
    let seeds = common.seeds.clone().unwrap_or_else(|| vec![base.seed]);
    if common.dump_dag.is_some() && seeds.len() != 1 {
        bail!("--dump-dag with `run` needs exactly one seed");
    }
    for seed in seeds {
        let cfg = base.clone().with_seed(seed);
        let out = dagsim::simulate(&cfg)?;
        if let Some(path) = &common.dump_dag {
            experiment::write_dag_dump(&out.dag, path)
                .with_context(|| format!("writing DAG dump {}", path.display()))?;
        }
        match &common.out {
            Some(path) => experiment::append_run_row(path, &cfg, &out.report)
                .with_context(|| format!("writing {}", path.display()))?,
            None => experiment::write_run_csv(io::stdout().lock(), &cfg, &out.report)?,
        }
    }
    Ok(())
}

fn run_plan(plan: Plan, common: &Common) -> anyhow::Result<()> {
    if let Some(dir) = &common.dump_dag {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let results = plan.run_with_dumps(common.workers(), common.dump_dag.as_deref())?;
    match &common.out {
        Some(path) => write_file(path, |w| Ok(results.write_csv(w)?))?,
        None => results.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn all_counts(cfg: &SimConfig) -> Vec<usize> {
    (0..=cfg.miner_count).collect()
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(common) => run_single(&common),
        Command::Exp1 { common, counts } => {
            let base = common.base_config()?;
            let counts = counts.unwrap_or_else(|| all_counts(&base));
            run_plan(Plan::exp1(&base, &counts, &common.seeds())?, &common)
        }
        Command::Exp2 { common, counts } => {
            let base = common.base_config()?;
            let counts = counts.unwrap_or_else(|| all_counts(&base));
            run_plan(Plan::exp2(&base, &counts, &common.seeds())?, &common)
        }
        Command::Exp1b { common, alphas } => {
            let base = common.base_config()?;
            let alphas = alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
            run_plan(Plan::exp1b(&base, &alphas, &common.seeds())?, &common)
        }
        Command::Exp3 { common, lambdas, mode } => {
            let base = common.base_config()?;
            let lambdas = lambdas.unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
            run_plan(Plan::exp3(&base, &lambdas, mode.into(), &common.seeds())?, &common)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
