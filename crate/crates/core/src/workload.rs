//! Poisson traffic calibrated to an offered load, and delay/throughput
//! bookkeeping.
//!
//! Offered load is `lambda = T_trans / (T_trans + T_interval)`. Each source
//! waits `T_trans + Exp(mean_interval)` between generations, so the mean gap
//! is `T_trans / lambda` and `lambda = 1` means back-to-back messages.

use crate::error::{Error, Result};
use crate::sim_engine::{RngStream, SimTime};

pub const DEFAULT_BANDWIDTH_BPS: u64 = 12_500_000_000;

/// Serialization time of `bytes` on a `bandwidth_bps` channel, rounded to the
/// nearest picosecond (exact for 12.5 Gbps).
pub fn transmission_time(bytes: u64, bandwidth_bps: u64) -> Result<SimTime> {
    if bandwidth_bps == 0 {
        return Err(Error::arg("bandwidth must be positive"));
    }
    let num = bytes as u128 * 8 * 1_000_000_000_000u128;
    let bw = bandwidth_bps as u128;
    Ok(SimTime::from_ps(((2 * num + bw) / (2 * bw)) as u64))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::config(
            "lambda",
            format!("{lambda} is outside (0, 1]"),
        ));
    }
    Ok(())
}

/// Mean idle gap `T_trans * (1 - lambda) / lambda`.
pub fn mean_interval(lambda: f64, t_trans: SimTime) -> Result<SimTime> {
    check_lambda(lambda)?;
    let ps = t_trans.as_ps() as f64 * (1.0 - lambda) / lambda;
    Ok(SimTime::from_ps(ps.round() as u64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrafficParams {
    pub lambda: f64,
    pub msg_bytes: u64,
    pub bandwidth_bps: u64,
    pub t_trans: SimTime,
    pub mean_interval: SimTime,
}

impl TrafficParams {
    pub fn new(lambda: f64, msg_bytes: u64, bandwidth_bps: u64) -> Result<Self> {
        check_lambda(lambda)?;
        if msg_bytes == 0 {
            return Err(Error::config("msg_bytes", "must be positive"));
        }
        let t_trans = transmission_time(msg_bytes, bandwidth_bps)?;
        Ok(TrafficParams {
            lambda,
            msg_bytes,
            bandwidth_bps,
            t_trans,
            mean_interval: mean_interval(lambda, t_trans)?,
        })
    }

    /// Gap until the next generation at one source.
    pub fn next_arrival(&self, stream: &mut RngStream) -> SimTime {
        if self.mean_interval == SimTime::ZERO {
            return self.t_trans;
        }
        // mean_interval is positive here, so sampling cannot fail
        self.t_trans + stream.sample_exponential(self.mean_interval).unwrap()
    }
}

/// Uniform destination over the `n - 1` terminals other than `src`.
pub fn sample_destination(stream: &mut RngStream, src: u32, n: u32) -> Result<u32> {
    if n < 2 {
        return Err(Error::arg("uniform traffic needs at least two terminals"));
    }
    if src >= n {
        return Err(Error::arg(format!("source {src} outside 0..{n}")));
    }
    let r = stream.sample_uniform_int(u64::from(n - 1))? as u32;
    Ok(if r >= src { r + 1 } else { r })
}

/// Raw counters of the measured (post-warmup) messages of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub sent: u64,
    pub received: u64,
    pub dropped: u64,
    pub sum_delay_ps: u128,
    pub received_per_dest: Vec<u64>,
}

impl RunStats {
    pub fn new(terminals: u32) -> Self {
        RunStats {
            received_per_dest: vec![0; terminals as usize],
            ..Default::default()
        }
    }

    pub fn record_sent(&mut self) {
        self.sent += 1;
    }

    pub fn record_delivery(&mut self, dest: u32, t_gen: SimTime, now: SimTime) {
        self.received += 1;
        self.sum_delay_ps += u128::from((now - t_gen).as_ps());
        if let Some(c) = self.received_per_dest.get_mut(dest as usize) {
            *c += 1;
        }
    }

    pub fn record_drop(&mut self) {
        self.dropped += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub sent: u64,
    pub received: u64,
    pub dropped: u64,
    /// Mean end-to-end delay in nanoseconds; `None` when nothing was delivered.
    pub mean_delay_ns: Option<f64>,
    pub throughput: f64,
}

/// Mean delay over delivered messages and `lambda * received / sent`.
pub fn finalize(stats: &RunStats, lambda: f64) -> Summary {
    let mean_delay_ns =
        (stats.received > 0).then(|| stats.sum_delay_ps as f64 / stats.received as f64 / 1_000.0);
    let throughput = if stats.sent == 0 {
        0.0
    } else {
        eq3_throughput(lambda, stats.received, stats.sent)
    };
    Summary {
        sent: stats.sent,
        received: stats.received,
        dropped: stats.dropped,
        mean_delay_ns,
        throughput,
    }
}

/// `lambda * (received / sent)`, evaluated in one fixed order so that callers
/// recomputing it from logged counters get the identical float. Taking the
/// ratio first keeps the result exactly `lambda` when nothing was lost and
/// never above it otherwise.
pub fn eq3_throughput(lambda: f64, received: u64, sent: u64) -> f64 {
    lambda * (received as f64 / sent as f64)
}
