//! Output-port selection for the adaptive distributed algorithm (DRA) and the
//! bit-controlled baseline (BCRA), plus the path oracle used to check them.
//!
//! In stages `k..=2k-1` both algorithms are forced: stage `2k - b` steers by
//! routing bit `b` of the destination, `floor(dest / 2^(b-1)) mod 2`, with 0
//! meaning the upper output. In stages `1..k` DRA takes whichever output is
//! free, while BCRA keeps following destination bits and never looks at the
//! network.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sim_engine::RngStream;
use crate::topology::{BenesNetwork, LinkId, Port, SwitchCoord, MAX_K};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Dra,
    Bcra,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dra => "dra",
            Algorithm::Bcra => "bcra",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dra" => Ok(Algorithm::Dra),
            "bcra" => Ok(Algorithm::Bcra),
            other => Err(Error::arg(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoutingDecision {
    Take(Port),
    Blocked,
}

/// Reservation state of the two output links of a switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PortAvailability {
    pub upper_free: bool,
    pub lower_free: bool,
}

impl PortAvailability {
    pub const ALL_FREE: PortAvailability = PortAvailability {
        upper_free: true,
        lower_free: true,
    };

    pub fn is_free(self, port: Port) -> bool {
        match port {
            Port::Upper => self.upper_free,
            Port::Lower => self.lower_free,
        }
    }
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::arg(format!("k must be in 1..={MAX_K}, got {k}")));
    }
    Ok(())
}

fn check_dest(dest: u32, k: u32) -> Result<()> {
    if dest >= 1 << k {
        return Err(Error::arg(format!(
            "terminal {dest} outside 0..{}",
            1u32 << k
        )));
    }
    Ok(())
}

fn check_stage(j: u32, k: u32) -> Result<()> {
    if j == 0 || j > 2 * k - 1 {
        return Err(Error::arg(format!("stage {j} outside 1..={}", 2 * k - 1)));
    }
    Ok(())
}

/// `floor(dest / 2^(b-1)) mod 2`, the bit steering stage `2k - b`.
pub fn routing_bit(dest: u32, b: u32, k: u32) -> Result<u32> {
    check_k(k)?;
    check_dest(dest, k)?;
    if b == 0 || b > k {
        return Err(Error::arg(format!("routing bit index {b} outside 1..={k}")));
    }
    Ok((dest / (1 << (b - 1))) % 2)
}

/// Port chosen from the destination alone: bit `p(j)` of `dest`.
pub fn deterministic_port(j: u32, dest: u32, k: u32) -> Result<Port> {
    check_k(k)?;
    check_stage(j, k)?;
    check_dest(dest, k)?;
    let bit = if j >= k {
        routing_bit(dest, 2 * k - j, k)?
    } else {
        // first half mirrors the second: p(j) = j - 1
        (dest >> (j - 1)) & 1
    };
    Ok(Port::from_bit(bit))
}

fn forced(port: Port, avail: PortAvailability) -> RoutingDecision {
    if avail.is_free(port) {
        RoutingDecision::Take(port)
    } else {
        RoutingDecision::Blocked
    }
}

/// How DRA picks between two free outputs in stages `1..k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TieBreak {
    /// Take the port the destination label names, so DRA only leaves the
    /// BCRA route where that route is busy.
    #[default]
    Label,
    /// Fair coin from the run's tie-break stream.
    Random,
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "label" => Ok(TieBreak::Label),
            "random" => Ok(TieBreak::Random),
            other => Err(Error::arg(format!("unknown tie-break rule `{other}`"))),
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::Label => "label",
            TieBreak::Random => "random",
        })
    }
}

/// DRA port selection at stage `j`. `rng` is only drawn from for
/// [`TieBreak::Random`] when both outputs are free.
pub fn dra_select(
    j: u32,
    k: u32,
    dest: u32,
    avail: PortAvailability,
    tie_break: TieBreak,
    rng: &mut RngStream,
) -> Result<RoutingDecision> {
    check_k(k)?;
    check_stage(j, k)?;
    check_dest(dest, k)?;
    if j >= k {
        return Ok(forced(deterministic_port(j, dest, k)?, avail));
    }
    Ok(match (avail.upper_free, avail.lower_free) {
        (false, true) => RoutingDecision::Take(Port::Lower),
        (true, false) => RoutingDecision::Take(Port::Upper),
        (true, true) => RoutingDecision::Take(match tie_break {
            TieBreak::Label => deterministic_port(j, dest, k)?,
            TieBreak::Random if rng.coin() => Port::Lower,
            TieBreak::Random => Port::Upper,
        }),
        (false, false) => RoutingDecision::Blocked,
    })
}

/// BCRA port selection at stage `j`: follow the label, block if it is busy.
pub fn bcra_select(j: u32, k: u32, dest: u32, avail: PortAvailability) -> Result<RoutingDecision> {
    Ok(forced(deterministic_port(j, dest, k)?, avail))
}

/// The `2k - 1` BCRA label bits for `dest`, stage 1 first.
pub fn bcra_label(dest: u32, k: u32) -> Result<Vec<u32>> {
    (1..=2 * k - 1)
        .map(|j| deterministic_port(j, dest, k).map(Port::bit))
        .collect()
}

/// A complete source-to-destination route: one `(switch, output port)` per stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub src: u32,
    pub dest: u32,
    pub hops: Vec<(SwitchCoord, Port)>,
}

impl Path {
    /// Every link the path occupies, injection first and ejection last.
    pub fn links(&self, net: &BenesNetwork) -> Vec<LinkId> {
        let mut links = Vec::with_capacity(self.hops.len() + 1);
        links.push(net.injection_link(self.src));
        for (sw, port) in &self.hops {
            links.push(net.output_link(sw.stage, sw.index, *port).unwrap());
        }
        links
    }

    /// Line the path leaves the last stage on.
    pub fn ejection_line(&self, net: &BenesNetwork) -> u32 {
        let (sw, port) = self.hops.last().expect("path has at least one hop");
        net.line_for_switch(sw.stage, sw.index, *port).unwrap()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.src)?;
        for (sw, port) in &self.hops {
            write!(f, " {sw}.{port}")?;
        }
        write!(f, " D{}", self.dest)
    }
}

/// Follow `choices` through stages `1..k` and destination bits afterwards.
pub fn trace_path(net: &BenesNetwork, src: u32, dest: u32, choices: &[Port]) -> Result<Path> {
    let k = net.k();
    check_dest(src, k)?;
    check_dest(dest, k)?;
    if choices.len() != (k - 1) as usize {
        return Err(Error::arg(format!(
            "expected {} first-half choices, got {}",
            k - 1,
            choices.len()
        )));
    }
    let mut line = src;
    let mut hops = Vec::with_capacity(net.stage_count() as usize);
    for j in 1..=net.stage_count() {
        let (index, _) = net.switch_for_line(j, line)?;
        let port = if j < k {
            choices[(j - 1) as usize]
        } else {
            deterministic_port(j, dest, k)?
        };
        hops.push((SwitchCoord { index, stage: j }, port));
        line = net.line_for_switch(j, index, port)?;
    }
    Ok(Path { src, dest, hops })
}

/// All `2^(k-1)` routes DRA can produce for `(src, dest)` in an idle network,
/// ordered by choice vector (stage 1 as the most significant choice).
pub fn enumerate_paths(net: &BenesNetwork, src: u32, dest: u32) -> Result<Vec<Path>> {
    let free = net.k() - 1;
    (0u64..1 << free)
        .map(|v| {
            let choices: Vec<Port> = (0..free)
                .map(|i| Port::from_bit((v >> (free - 1 - i)) as u32))
                .collect();
            trace_path(net, src, dest, &choices)
        })
        .collect()
}

/// The unique BCRA route.
pub fn bcra_path(net: &BenesNetwork, src: u32, dest: u32) -> Result<Path> {
    let k = net.k();
    check_dest(dest, k)?;
    let choices: Vec<Port> = (1..k)
        .map(|j| deterministic_port(j, dest, k))
        .collect::<Result<_>>()?;
    trace_path(net, src, dest, &choices)
}
