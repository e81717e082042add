//! Sweep specifications: a flat `key = value` file, optionally overridden by
//! `--key value` flags.
//!
//! ```text
//! # message-length sweep on a 16x16 network
//! algorithms = dra, bcra
//! n = 16
//! msg_bytes = 32, 64, 128
//! lambda = 0.1:0.9:0.1
//! seeds = 1:5
//! ```
//!
//! List keys take comma-separated values; `lambda` also accepts
//! `start:end:step` and `seeds` accepts an inclusive `first:last` range.

use std::path::Path;
use std::str::FromStr;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::routing::{Algorithm, TieBreak};
use crate::sim_engine::SimTime;
use crate::topology::MAX_K;

/// Every key accepted in a config file or as a `--key` flag.
pub const KEYS: &[&str] = &[
    "algorithms",
    "k",
    "n",
    "msg_bytes",
    "lambda",
    "seeds",
    "setup_bytes",
    "bandwidth",
    "control_hop_latency_ns",
    "data_hop_latency_ns",
    "retry_limit",
    "retry_backoff_ns",
    "warmup_fraction",
    "messages_per_source",
    "dra_tie_break",
];

/// A validated Cartesian-product sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub algorithms: Vec<Algorithm>,
    pub ks: Vec<u32>,
    pub msg_bytes: Vec<u64>,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Scalar parameters shared by every point.
    pub base: SimConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let base = SimConfig::default();
        SweepSpec {
            algorithms: vec![base.algorithm],
            ks: vec![base.k],
            msg_bytes: vec![base.msg_bytes],
            lambdas: vec![base.lambda],
            seeds: vec![base.seed],
            base,
        }
    }
}

impl SweepSpec {
    /// Points in output order: algorithm, size, message length, load, seed.
    pub fn points(&self) -> Vec<SimConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &algorithm in &self.algorithms {
            for &k in &self.ks {
                for &msg_bytes in &self.msg_bytes {
                    for &lambda in &self.lambdas {
                        for &seed in &self.seeds {
                            out.push(SimConfig {
                                algorithm,
                                k,
                                msg_bytes,
                                lambda,
                                seed,
                                ..self.base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.algorithms.len()
            * self.ks.len()
            * self.msg_bytes.len()
            * self.lambdas.len()
            * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let b = &mut self.base;
        match key {
            "algorithms" | "algorithm" => self.algorithms = list(key, value)?,
            "k" => self.ks = list(key, value)?,
            "n" => {
                self.ks = list::<u32>(key, value)?
                    .into_iter()
                    .map(|n| {
                        log2_exact(n)
                            .ok_or_else(|| Error::config("n", format!("{n} is not a power of two")))
                    })
                    .collect::<Result<_>>()?
            }
            "msg_bytes" => self.msg_bytes = list(key, value)?,
            "lambda" => self.lambdas = lambda_list(value)?,
            "seeds" | "seed" => self.seeds = seed_list(value)?,
            "setup_bytes" => b.setup_bytes = scalar(key, value)?,
            "bandwidth" => {
                let bps: f64 = scalar(key, value)?;
                if !(bps.is_finite() && bps >= 1.0) {
                    return Err(Error::config(
                        key,
                        format!("{value} is not a positive bit rate"),
                    ));
                }
                b.bandwidth_bps = bps.round() as u64;
            }
            "control_hop_latency_ns" => b.control_hop_latency = nanos(key, value)?,
            "data_hop_latency_ns" => b.data_hop_latency = nanos(key, value)?,
            "retry_limit" => b.retry_limit = scalar(key, value)?,
            "retry_backoff_ns" => b.retry_backoff = nanos(key, value)?,
            "warmup_fraction" => b.warmup_fraction = scalar(key, value)?,
            "messages_per_source" => b.messages_per_source = scalar(key, value)?,
            "dra_tie_break" => b.dra_tie_break = scalar::<TieBreak>(key, value)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Check every point and every list.
    pub fn validate(&self) -> Result<()> {
        for (key, empty) in [
            ("algorithms", self.algorithms.is_empty()),
            ("k", self.ks.is_empty()),
            ("msg_bytes", self.msg_bytes.is_empty()),
            ("lambda", self.lambdas.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::config(key, "needs at least one value"));
            }
        }
        if let Some(&k) = self.ks.iter().find(|&&k| k == 0 || k > MAX_K) {
            return Err(Error::config("k", format!("{k} is outside 1..={MAX_K}")));
        }
        let probe = SimConfig {
            algorithm: self.algorithms[0],
            k: self.ks[0],
            msg_bytes: self.msg_bytes[0],
            lambda: self.lambdas[0],
            seed: self.seeds[0],
            ..self.base.clone()
        };
        probe.validate()?;
        for &msg_bytes in &self.msg_bytes {
            SimConfig {
                msg_bytes,
                ..probe.clone()
            }
            .validate()?;
        }
        for &lambda in &self.lambdas {
            SimConfig {
                lambda,
                ..probe.clone()
            }
            .validate()?;
        }
        Ok(())
    }
}

/// Parse config text, then apply overrides in order, then validate.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<SweepSpec> {
    let mut spec = SweepSpec::default();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::arg(format!(
                "line {}: expected `key = value`, got `{line}`",
                no + 1
            ))
        })?;
        spec.set(key.trim(), value)?;
    }
    for (key, value) in overrides {
        spec.set(key, value)?;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn parse_config_file(path: Option<&Path>, overrides: &[(String, String)]) -> Result<SweepSpec> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::arg(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config(&text, overrides)
}

/// Turn `--key value` / `--key=value` arguments into key/value pairs.
/// Dashes in flag names map to underscores.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let flag = arg
            .strip_prefix("--")
            .ok_or_else(|| Error::arg(format!("expected a --key flag, got `{arg}`")))?;
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::arg(format!("flag `--{flag}` needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        out.push((key.replace('-', "_"), value));
    }
    Ok(out)
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{}`", value.trim())))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| scalar(key, v)).collect()
}

fn nanos(key: &str, value: &str) -> Result<SimTime> {
    let ns: f64 = scalar(key, value)?;
    if !(ns.is_finite() && ns >= 0.0) {
        return Err(Error::config(
            key,
            format!("{value} is not a non-negative latency"),
        ));
    }
    Ok(SimTime::from_ps((ns * 1_000.0).round() as u64))
}

fn log2_exact(n: u32) -> Option<u32> {
    (n >= 2 && n.is_power_of_two()).then(|| n.trailing_zeros())
}

/// `a, b, c` or `start:end:step`, the range inclusive of `end` and snapped to
/// nine decimals so that `0.1:0.9:0.1` yields exactly `0.3` rather than
/// `0.30000000000000004`.
fn lambda_list(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [_] => list("lambda", value),
        [start, end, step] => {
            let (start, end, step): (f64, f64, f64) = (
                scalar("lambda", start)?,
                scalar("lambda", end)?,
                scalar("lambda", step)?,
            );
            if step.is_nan() || step <= 0.0 || end < start {
                return Err(Error::config("lambda", format!("bad range `{value}`")));
            }
            let count = ((end - start) / step + 1e-9).floor() as u64 + 1;
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        _ => Err(Error::config("lambda", format!("bad range `{value}`"))),
    }
}

fn seed_list(value: &str) -> Result<Vec<u64>> {
    match value.split_once(':') {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (scalar("seeds", a)?, scalar("seeds", b)?);
            if b < a {
                return Err(Error::config("seeds", format!("bad range `{value}`")));
            }
            Ok((a..=b).collect())
        }
        None => list("seeds", value),
    }
}
