//! Discrete-event simulator for circuit-switched Benes optical
//! networks-on-chip, comparing adaptive distributed routing (DRA) with
//! bit-controlled routing (BCRA).

pub mod circuit;
pub mod config;
pub mod error;
pub mod experiment;
pub mod routing;
pub mod sim_engine;
pub mod topology;
pub mod workload;

pub use circuit::{run, RunOutcome, Simulation};
pub use config::SimConfig;
pub use error::{Error, Result};
pub use routing::Algorithm;
pub use sim_engine::SimTime;
