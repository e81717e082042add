//! Flat Benes wiring: `2k - 1` stages of `N/2` 2x2 switches.
//!
//! Stage `j` pairs the two lines that differ only in bit `p(j)`, with
//! `p = (0, 1, ..., k-1, ..., 1, 0)`. Wires between stages are straight: the
//! line a message leaves stage `j` on is the line it enters stage `j + 1` on.
//! Boundary 0 holds the injection links and boundary `2k - 1` the ejection
//! links.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

pub const MAX_K: u32 = 16;

/// Output (or input) port of a 2x2 switching element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    Upper,
    Lower,
}

impl Port {
    /// Port selected by an address bit: 0 is upper, 1 is lower.
    pub fn from_bit(bit: u32) -> Port {
        if bit & 1 == 0 {
            Port::Upper
        } else {
            Port::Lower
        }
    }

    pub fn bit(self) -> u32 {
        match self {
            Port::Upper => 0,
            Port::Lower => 1,
        }
    }

    pub fn other(self) -> Port {
        match self {
            Port::Upper => Port::Lower,
            Port::Lower => Port::Upper,
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Port::Upper => "upper",
            Port::Lower => "lower",
        })
    }
}

/// Terminal-numbered line at a stage boundary.
pub type LineIndex = u32;

/// Switch `index` at stage `stage` (stages are 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwitchCoord {
    pub index: u32,
    pub stage: u32,
}

impl fmt::Display for SwitchCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R({},{})", self.index, self.stage)
    }
}

/// A physical channel: `boundary` 0 is injection, `2k - 1` is ejection,
/// anything else sits between stage `boundary` and `boundary + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId {
    pub boundary: u32,
    pub line: LineIndex,
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L({},{})", self.boundary, self.line)
    }
}

/// Immutable topology of an `N x N` Benes network, `N = 2^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenesNetwork {
    k: u32,
    pair_bits: Vec<u32>,
}

/// Pairing bit of stage `j` in a network of size parameter `k`.
pub fn pair_bit(j: u32, k: u32) -> Result<u32> {
    if k == 0 || k > MAX_K {
        return Err(Error::arg(format!("k must be in 1..={MAX_K}, got {k}")));
    }
    let stages = 2 * k - 1;
    if j == 0 || j > stages {
        return Err(Error::arg(format!("stage {j} outside 1..={stages}")));
    }
    Ok(if j <= k { j - 1 } else { 2 * k - 1 - j })
}

pub fn build_network(k: u32) -> Result<BenesNetwork> {
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if k > MAX_K {
        return Err(Error::arg(format!(
            "k = {k} exceeds the supported maximum {MAX_K}"
        )));
    }
    let pair_bits = (1..=2 * k - 1)
        .map(|j| pair_bit(j, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenesNetwork { k, pair_bits })
}

impl BenesNetwork {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn terminals(&self) -> u32 {
        1 << self.k
    }

    pub fn stage_count(&self) -> u32 {
        2 * self.k - 1
    }

    pub fn switches_per_stage(&self) -> u32 {
        self.terminals() / 2
    }

    /// Boundary index of the ejection links.
    pub fn ejection_boundary(&self) -> u32 {
        self.stage_count()
    }

    pub fn pair_bits(&self) -> &[u32] {
        &self.pair_bits
    }

    pub fn pair_bit(&self, j: u32) -> Result<u32> {
        self.check_stage(j)?;
        Ok(self.pair_bits[(j - 1) as usize])
    }

    fn check_stage(&self, j: u32) -> Result<()> {
        if j == 0 || j > self.stage_count() {
            return Err(Error::arg(format!(
                "stage {j} outside 1..={}",
                self.stage_count()
            )));
        }
        Ok(())
    }

    fn check_line(&self, line: LineIndex) -> Result<()> {
        if line >= self.terminals() {
            return Err(Error::arg(format!(
                "line {line} outside 0..{}",
                self.terminals()
            )));
        }
        Ok(())
    }

    fn check_switch(&self, index: u32) -> Result<()> {
        if index >= self.switches_per_stage() {
            return Err(Error::arg(format!(
                "switch {index} outside 0..{}",
                self.switches_per_stage()
            )));
        }
        Ok(())
    }

    /// Switch and input port that `line` enters at stage `j`.
    pub fn switch_for_line(&self, j: u32, line: LineIndex) -> Result<(u32, Port)> {
        self.check_stage(j)?;
        self.check_line(line)?;
        let p = self.pair_bits[(j - 1) as usize];
        let low = line & ((1 << p) - 1);
        let high = line >> (p + 1);
        Ok(((high << p) | low, Port::from_bit(line >> p)))
    }

    /// Inverse of [`switch_for_line`](Self::switch_for_line).
    pub fn line_for_switch(&self, j: u32, index: u32, port: Port) -> Result<LineIndex> {
        self.check_stage(j)?;
        self.check_switch(index)?;
        let p = self.pair_bits[(j - 1) as usize];
        let low = index & ((1 << p) - 1);
        let high = index >> p;
        Ok((high << (p + 1)) | (port.bit() << p) | low)
    }

    pub fn output_link(&self, j: u32, index: u32, port: Port) -> Result<LinkId> {
        Ok(LinkId {
            boundary: j,
            line: self.line_for_switch(j, index, port)?,
        })
    }

    pub fn injection_link(&self, src: u32) -> LinkId {
        LinkId {
            boundary: 0,
            line: src,
        }
    }

    pub fn ejection_link(&self, dest: u32) -> LinkId {
        LinkId {
            boundary: self.ejection_boundary(),
            line: dest,
        }
    }

    /// Number of distinct links including injection and ejection.
    pub fn link_count(&self) -> usize {
        ((self.stage_count() + 1) * self.terminals()) as usize
    }

    /// Dense index for per-link tables.
    pub fn link_index(&self, link: LinkId) -> usize {
        (link.boundary * self.terminals() + link.line) as usize
    }

    /// Text adjacency listing, one line per link in `(boundary, line)` order.
    ///
    /// ```text
    /// L(0,5) src5 -> R(2,1).lower
    /// L(3,5) R(1,3).lower -> R(5,4).upper
    /// L(7,5) R(2,7).lower -> dst5
    /// ```
    pub fn dump_wiring(&self) -> String {
        let mut out = String::new();
        let n = self.terminals();
        for boundary in 0..=self.stage_count() {
            for line in 0..n {
                let link = LinkId { boundary, line };
                let from = if boundary == 0 {
                    format!("src{line}")
                } else {
                    let (sw, port) = self.switch_for_line(boundary, line).unwrap();
                    format!(
                        "{}.{}",
                        SwitchCoord {
                            index: sw,
                            stage: boundary
                        },
                        port
                    )
                };
                let to = if boundary == self.stage_count() {
                    format!("dst{line}")
                } else {
                    let (sw, port) = self.switch_for_line(boundary + 1, line).unwrap();
                    format!(
                        "{}.{}",
                        SwitchCoord {
                            index: sw,
                            stage: boundary + 1
                        },
                        port
                    )
                };
                writeln!(out, "{link} {from} -> {to}").unwrap();
            }
        }
        out
    }
}
