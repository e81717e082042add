use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use benes_onoc::experiment::{
    emit_plot, parse_config_file, parse_overrides, paths_debug, run_sweep, write_csv, KEYS,
};
use benes_onoc::topology::build_network;
use benes_onoc::{Error, Result, Simulation};

/// Directory for results when `--out` is not given.
const OUT_DIR_ENV: &str = "BENES_SIM_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "benes-sim",
    version,
    about = "Circuit-switched Benes ONoC simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a load sweep and write one CSV row per run.
    #[command(after_help = sweep_help())]
    Sweep {
        /// Flat `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV output (default: $BENES_SIM_OUT_DIR/results.csv or ./results.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a delay/throughput chart as SVG.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Write the protocol event trace of a single-point sweep.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// `--key value` overrides of config keys.
        #[arg(
            trailing_var_arg = true,
            allow_hyphen_values = true,
            value_name = "OVERRIDES"
        )]
        overrides: Vec<String>,
    },
    /// List every adaptive route between two terminals, marking the BCRA route.
    Paths {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        src: u32,
        #[arg(long)]
        dest: u32,
    },
    /// Print the link wiring of a 2^k x 2^k network.
    DumpTopology {
        #[arg(long)]
        k: u32,
    },
}

fn sweep_help() -> String {
    format!(
        "Config keys (also accepted as --key flags): {}",
        KEYS.join(", ")
    )
}

fn default_out() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
        .join("results.csv")
}

fn sweep(
    mut config: Option<PathBuf>,
    mut out: Option<PathBuf>,
    mut plot: Option<PathBuf>,
    mut trace: Option<PathBuf>,
    overrides: &[String],
) -> Result<()> {
    // clap stops at the first override, so output options given after one
    // land here too
    let mut keys = Vec::new();
    for (key, value) in parse_overrides(overrides)? {
        let slot = match key.as_str() {
            "config" => &mut config,
            "out" => &mut out,
            "plot" => &mut plot,
            "trace" => &mut trace,
            _ => {
                keys.push((key, value));
                continue;
            }
        };
        *slot = Some(PathBuf::from(value));
    }
    let spec = parse_config_file(config.as_deref(), &keys)?;
    if let Some(path) = &trace {
        let points = spec.points();
        let [point] = points.as_slice() else {
            return Err(Error::InvalidArgument(format!(
                "--trace needs a single-point sweep, this one has {}",
                points.len()
            )));
        };
        let mut sim = Simulation::new(point)?.with_trace();
        sim.run_to_drain()?;
        let lines = sim.outcome().trace.unwrap_or_default();
        std::fs::write(path, lines.join("\n") + "\n")?;
    }

    eprintln!("running {} simulations", spec.len());
    let rows = run_sweep(&spec)?;
    let out = out.unwrap_or_else(default_out);
    write_csv(&rows, &out)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    if let Some(p) = plot {
        emit_plot(&rows, &p)?;
        eprintln!("wrote chart to {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sweep {
            config,
            out,
            plot,
            trace,
            overrides,
        } => sweep(config, out, plot, trace, &overrides),
        Command::Paths { k, src, dest } => paths_debug(k, src, dest).map(|s| print!("{s}")),
        Command::DumpTopology { k } => build_network(k).map(|net| print!("{}", net.dump_wiring())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
