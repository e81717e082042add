use crate::error::{Error, Result};
use crate::routing::{Algorithm, TieBreak};
use crate::sim_engine::SimTime;
use crate::topology::MAX_K;
use crate::workload::DEFAULT_BANDWIDTH_BPS;

/// Parameters of one simulation run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub k: u32,
    pub algorithm: Algorithm,
    pub dra_tie_break: TieBreak,
    pub msg_bytes: u64,
    pub lambda: f64,
    pub seed: u64,
    pub setup_bytes: u64,
    pub bandwidth_bps: u64,
    pub control_hop_latency: SimTime,
    pub data_hop_latency: SimTime,
    /// Extra setup attempts allowed after a block; 0 drops on the first block.
    pub retry_limit: u32,
    pub retry_backoff: SimTime,
    /// Fraction of each source's expected generations treated as warmup.
    pub warmup_fraction: f64,
    /// Measured messages per source; arrivals stop network-wide once
    /// `messages_per_source * N` measured messages have been generated.
    pub messages_per_source: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            k: 4,
            algorithm: Algorithm::Dra,
            dra_tie_break: TieBreak::Label,
            msg_bytes: 64,
            lambda: 0.5,
            seed: 1,
            setup_bytes: 32,
            bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            control_hop_latency: SimTime::from_ns(1),
            data_hop_latency: SimTime::ZERO,
            retry_limit: 10,
            retry_backoff: SimTime::from_ns(10),
            warmup_fraction: 0.1,
            messages_per_source: 625,
        }
    }
}

impl SimConfig {
    pub fn terminals(&self) -> u32 {
        1 << self.k
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_K {
            return Err(Error::config(
                "k",
                format!("{} is outside 1..={MAX_K}", self.k),
            ));
        }
        if self.msg_bytes == 0 {
            return Err(Error::config("msg_bytes", "must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::config(
                "lambda",
                format!("{} is outside (0, 1]", self.lambda),
            ));
        }
        if self.bandwidth_bps == 0 {
            return Err(Error::config("bandwidth", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::config(
                "warmup_fraction",
                format!("{} is outside [0, 1)", self.warmup_fraction),
            ));
        }
        if self.messages_per_source == 0 {
            return Err(Error::config("messages_per_source", "must be positive"));
        }
        Ok(())
    }

    /// Measured generations network-wide after which arrivals stop.
    pub fn messages_target(&self) -> u64 {
        self.messages_per_source * u64::from(self.terminals())
    }

    /// Number of leading generations at each source excluded from statistics,
    /// `warmup_fraction` of the expected per-source total.
    pub fn warmup_per_source(&self) -> u64 {
        let total = self.messages_per_source as f64 / (1.0 - self.warmup_fraction);
        (total * self.warmup_fraction).round() as u64
    }
}
