//! Load sweeps over algorithms, network sizes, message lengths and seeds,
//! with CSV output and comparison charts.

mod plot;
mod spec;

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::run;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::routing::{bcra_path, enumerate_paths, Algorithm};
use crate::topology::build_network;

pub use plot::{emit_plot, render_plot};
pub use spec::{parse_config, parse_config_file, parse_overrides, SweepSpec, KEYS};

pub const CSV_HEADER: &str =
    "algorithm,N,msg_bytes,lambda,seed,sent,received,dropped,mean_delay_ns,throughput";

/// Result of one (configuration, seed) run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub algorithm: Algorithm,
    pub n: u32,
    pub msg_bytes: u64,
    pub lambda: f64,
    pub seed: u64,
    pub sent: u64,
    pub received: u64,
    pub dropped: u64,
    pub mean_delay_ns: Option<f64>,
    pub throughput: f64,
}

/// On-disk form: fixed column order and precision.
#[derive(Serialize, Deserialize)]
struct CsvRecord {
    algorithm: String,
    #[serde(rename = "N")]
    n: u32,
    msg_bytes: u64,
    lambda: f64,
    seed: u64,
    sent: u64,
    received: u64,
    dropped: u64,
    mean_delay_ns: Option<String>,
    throughput: String,
}

impl RunRow {
    pub fn from_run(cfg: &SimConfig) -> Result<RunRow> {
        let s = run(cfg)?.summary;
        Ok(RunRow {
            algorithm: cfg.algorithm,
            n: cfg.terminals(),
            msg_bytes: cfg.msg_bytes,
            lambda: cfg.lambda,
            seed: cfg.seed,
            sent: s.sent,
            received: s.received,
            dropped: s.dropped,
            mean_delay_ns: s.mean_delay_ns,
            throughput: s.throughput,
        })
    }

    fn to_record(&self) -> CsvRecord {
        CsvRecord {
            algorithm: self.algorithm.to_string(),
            n: self.n,
            msg_bytes: self.msg_bytes,
            lambda: self.lambda,
            seed: self.seed,
            sent: self.sent,
            received: self.received,
            dropped: self.dropped,
            mean_delay_ns: self.mean_delay_ns.map(|d| format!("{d:.3}")),
            throughput: format!("{:.6}", self.throughput),
        }
    }

    fn from_record(r: CsvRecord) -> Result<RunRow> {
        let float = |key: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
        };
        Ok(RunRow {
            algorithm: r.algorithm.parse()?,
            n: r.n,
            msg_bytes: r.msg_bytes,
            lambda: r.lambda,
            seed: r.seed,
            sent: r.sent,
            received: r.received,
            dropped: r.dropped,
            mean_delay_ns: r
                .mean_delay_ns
                .as_deref()
                .map(|v| float("mean_delay_ns", v))
                .transpose()?,
            throughput: float("throughput", &r.throughput)?,
        })
    }
}

/// Run every point of `spec` (in parallel) and return rows in spec order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<RunRow>> {
    spec.validate()?;
    spec.points()
        .par_iter()
        .map(|cfg| {
            RunRow::from_run(cfg).map_err(|e| {
                Error::Runtime(format!(
                    "run {} N={} {}B lambda={} seed={} failed: {e}",
                    cfg.algorithm,
                    cfg.terminals(),
                    cfg.msg_bytes,
                    cfg.lambda,
                    cfg.seed
                ))
            })
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Runtime(format!("csv: {other:?}")),
    }
}

pub fn write_csv_to<W: Write>(rows: &[RunRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
    for row in rows {
        w.serialize(row.to_record()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[RunRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    write_csv_to(rows, std::io::BufWriter::new(file))
}

pub fn csv_string(rows: &[RunRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv_to(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::arg(format!(
            "unexpected csv header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .map(|rec| RunRow::from_record(rec.map_err(csv_error)?))
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRow>> {
    read_csv_from(std::fs::File::open(path)?)
}

/// Every DRA route of `(src, dest)`, one per line, with the BCRA route marked.
pub fn paths_debug(k: u32, src: u32, dest: u32) -> Result<String> {
    let net = build_network(k)?;
    let n = net.terminals();
    if src >= n || dest >= n {
        return Err(Error::arg(format!("terminals must be below {n}")));
    }
    if src == dest {
        return Err(Error::arg("destination must differ from source"));
    }
    let bcra = bcra_path(&net, src, dest)?;
    let mut out = String::new();
    for (i, path) in enumerate_paths(&net, src, dest)?.iter().enumerate() {
        let flag = if *path == bcra { "  [bcra]" } else { "" };
        out.push_str(&format!("{i}: {path}{flag}\n"));
    }
    Ok(out)
}
