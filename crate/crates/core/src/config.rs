//! Simulation parameters and the key-value config file.
//!
//! Defaults follow the reference parameter table: ring of 10 miners with 10%
//! power each, 5 s per hop, 100 transactions per block, pools of 10 000,
//! exponential fees with mean 150 and 10 000 blocks per run. The block
//! creation time defaults to 20 s, the value the profit and collision sweeps
//! hold fixed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
pub use crate::topology::TopologyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Uniform selection without replacement (honest behaviour).
    #[serde(alias = "honest")]
    Random,
    /// Highest-fee selection.
    #[serde(alias = "malicious")]
    Rational,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Rational => "rational",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Mean network-wide block interval λ, seconds.
    pub block_creation_time: f64,
    /// Per-hop delay τ, seconds.
    pub propagation_delay: f64,
    /// Number of mined blocks after which the run stops.
    pub total_blocks: u64,
    pub miner_count: usize,
    pub miner_powers: Vec<f64>,
    pub miner_strategies: Vec<Strategy>,
    pub block_capacity: usize,
    pub mempool_capacity: usize,
    pub fee_mean: f64,
    /// Transactions per second. `None` means twice the consumption rate,
    /// `2 × block_capacity / λ`.
    pub tx_gen_rate: Option<f64>,
    pub topology: TopologyKind,
    pub seed: u64,
    /// Constant reward discount applied to every first inclusion.
    pub discount: f64,
    /// Generate transactions until every pool is full before mining starts.
    pub warm_up: bool,
}

pub const DEFAULT_MINERS: usize = 10;

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            block_creation_time: 20.0,
            propagation_delay: 5.0,
            total_blocks: 10_000,
            miner_count: DEFAULT_MINERS,
            miner_powers: vec![1.0 / DEFAULT_MINERS as f64; DEFAULT_MINERS],
            miner_strategies: vec![Strategy::Random; DEFAULT_MINERS],
            block_capacity: 100,
            mempool_capacity: 10_000,
            fee_mean: 150.0,
            tx_gen_rate: None,
            topology: TopologyKind::Ring,
            seed: 1,
            discount: 1.0,
            warm_up: true,
        }
    }
}

impl SimConfig {
    /// `n` miners of equal power, all honest.
    pub fn with_equal_miners(mut self, n: usize) -> Self {
        self.miner_count = n;
        self.miner_powers = vec![1.0 / n as f64; n];
        self.miner_strategies = vec![Strategy::Random; n];
        self
    }

    /// Makes the first `count` miners rational and the rest honest.
    pub fn with_malicious(mut self, count: usize) -> Self {
        self.miner_strategies = (0..self.miner_count)
            .map(|i| if i < count { Strategy::Rational } else { Strategy::Random })
            .collect();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_blocks(mut self, blocks: u64) -> Self {
        self.total_blocks = blocks;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.block_creation_time = lambda;
        self
    }

    pub fn effective_tx_rate(&self) -> f64 {
        self.tx_gen_rate
            .unwrap_or(2.0 * self.block_capacity as f64 / self.block_creation_time)
    }

    pub fn malicious_count(&self) -> usize {
        self.miner_strategies
            .iter()
            .filter(|&&s| s == Strategy::Rational)
            .count()
    }

    /// Total power held by rational miners.
    pub fn adversarial_power(&self) -> f64 {
        self.miner_strategies
            .iter()
            .zip(&self.miner_powers)
            .filter(|(s, _)| **s == Strategy::Rational)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        use ConfigError as E;
        let lambda = self.block_creation_time;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(E::invalid(
                "block_creation_time (λ)",
                format!("must be a positive number of seconds, got {lambda}"),
            ));
        }
        let tau = self.propagation_delay;
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(E::invalid(
                "propagation_delay (τ)",
                format!("must be non-negative, got {tau}"),
            ));
        }
        if self.total_blocks == 0 {
            return Err(E::invalid("total_blocks", "must be at least 1"));
        }
        if self.miner_count == 0 {
            return Err(E::invalid("miners", "must be at least 1"));
        }
        if self.miner_powers.len() != self.miner_count {
            return Err(E::invalid(
                "powers",
                format!(
                    "expected {} entries, got {}",
                    self.miner_count,
                    self.miner_powers.len()
                ),
            ));
        }
        if let Some(p) = self.miner_powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(E::invalid("powers", format!("every power must be > 0, got {p}")));
        }
        let total: f64 = self.miner_powers.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(E::invalid("powers", format!("must sum to 1, got {total}")));
        }
        if self.miner_strategies.len() != self.miner_count {
            return Err(E::invalid(
                "strategies",
                format!(
                    "expected {} entries, got {}",
                    self.miner_count,
                    self.miner_strategies.len()
                ),
            ));
        }
        if self.block_capacity == 0 {
            return Err(E::invalid("block_capacity", "must be at least 1"));
        }
        if self.mempool_capacity < self.block_capacity {
            return Err(E::invalid(
                "mempool_capacity",
                format!(
                    "must be at least block_capacity ({}), got {}",
                    self.block_capacity, self.mempool_capacity
                ),
            ));
        }
        if !(self.fee_mean.is_finite() && self.fee_mean > 0.0) {
            return Err(E::invalid(
                "fee_lambda",
                format!("mean fee must be positive, got {}", self.fee_mean),
            ));
        }
        let rate = self.effective_tx_rate();
        if !(rate.is_finite() && rate > 0.0) {
            return Err(E::invalid("tx_gen_rate", format!("must be positive, got {rate}")));
        }
        if rate * lambda < self.block_capacity as f64 {
            return Err(E::invalid(
                "tx_gen_rate",
                format!(
                    "{rate} tx/s cannot fill a block of {} every {lambda} s",
                    self.block_capacity
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(E::invalid(
                "discount",
                format!("must lie in [0, 1], got {}", self.discount),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        let config = file.resolve()?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                ConfigError::NotFound(path.to_path_buf())
            } else {
                ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        Self::from_toml_str(&text)
    }
}

/// How the `fee_lambda` parameter of the exponential fee distribution is
/// read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeeParam {
    #[default]
    Mean,
    Rate,
}

/// On-disk config: flat keys, every one optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub block_creation_time: Option<f64>,
    pub propagation_delay: Option<f64>,
    pub total_blocks: Option<u64>,
    pub miners: Option<usize>,
    pub powers: Option<Vec<f64>>,
    pub strategies: Option<Vec<Strategy>>,
    /// Shorthand: the first `malicious` miners are rational.
    pub malicious: Option<usize>,
    pub topology: Option<TopologyKind>,
    pub block_capacity: Option<usize>,
    pub mempool_capacity: Option<usize>,
    pub fee_lambda: Option<f64>,
    pub fee_lambda_meaning: Option<FeeParam>,
    pub tx_gen_rate: Option<f64>,
    pub seed: Option<u64>,
    pub discount: Option<f64>,
    pub warm_up: Option<bool>,
}

impl ConfigFile {
    pub fn resolve(self) -> Result<SimConfig, ConfigError> {
        let d = SimConfig::default();
        let miners = self.miners.unwrap_or(d.miner_count);
        if miners == 0 {
            return Err(ConfigError::invalid("miners", "must be at least 1"));
        }
        let strategies = match (self.strategies, self.malicious) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid(
                    "malicious",
                    "cannot be combined with an explicit strategies list",
                ))
            }
            (Some(s), None) => s,
            (None, Some(m)) if m > miners => {
                return Err(ConfigError::invalid(
                    "malicious",
                    format!("{m} exceeds the number of miners ({miners})"),
                ))
            }
            (None, m) => (0..miners)
                .map(|i| {
                    if i < m.unwrap_or(0) {
                        Strategy::Rational
                    } else {
                        Strategy::Random
                    }
                })
                .collect(),
        };
        let fee_param = self.fee_lambda.unwrap_or(150.0);
        let fee_mean = match self.fee_lambda_meaning.unwrap_or_default() {
            FeeParam::Mean => fee_param,
            FeeParam::Rate => 1.0 / fee_param,
        };
        Ok(SimConfig {
            block_creation_time: self.block_creation_time.unwrap_or(d.block_creation_time),
            propagation_delay: self.propagation_delay.unwrap_or(d.propagation_delay),
            total_blocks: self.total_blocks.unwrap_or(d.total_blocks),
            miner_count: miners,
            miner_powers: self
                .powers
                .unwrap_or_else(|| vec![1.0 / miners as f64; miners]),
            miner_strategies: strategies,
            block_capacity: self.block_capacity.unwrap_or(d.block_capacity),
            mempool_capacity: self.mempool_capacity.unwrap_or(d.mempool_capacity),
            fee_mean,
            tx_gen_rate: self.tx_gen_rate,
            topology: self.topology.unwrap_or(d.topology),
            seed: self.seed.unwrap_or(d.seed),
            discount: self.discount.unwrap_or(d.discount),
            warm_up: self.warm_up.unwrap_or(d.warm_up),
        })
    }
}
