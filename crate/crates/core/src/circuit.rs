//! Circuit-switched setup / ACK / transmit / teardown protocol.
//!
//! A message at the head of its source queue sends a setup packet that
//! reserves one link per hop as the routing algorithm picks output ports.
//! When the ejection link is reserved the destination returns an ACK over the
//! control plane, the payload is serialized over the circuit, and a teardown
//! walks back from the destination freeing links. A blocked setup frees its
//! reserved prefix back towards the source and the message is dropped (or
//! re-queued while retries remain).
//!
//! Control hops cost `control_hop_latency` each and never contend; only data
//! links are reserved. A source holds at most one circuit at a time.
//!
//! Timeline of an uncontended message, with `s` the setup serialization time,
//! `c` the control hop latency and `d` the data hop latency:
//!
//! ```text
//! t_gen                 setup leaves source, injection link reserved
//! t_gen + s + c         setup at stage 1
//! t_gen + s + 2k*c      setup complete at destination
//! t_gen + s + 4k*c      ACK at source
//! ... + T_trans + 2k*d  delivery; teardown frees the ejection link
//! ... + (2k-1)*c        teardown frees the injection link; source is idle
//! ```

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::routing::{bcra_select, dra_select, Algorithm, Path, PortAvailability, RoutingDecision};
use crate::sim_engine::{derive_stream, EventQueue, RngStream, SimTime};
use crate::topology::{build_network, BenesNetwork, LinkId, Port};
use crate::workload::{
    finalize, sample_destination, transmission_time, RunStats, Summary, TrafficParams,
};

pub type MessageId = usize;
pub type CircuitId = usize;

/// Stream index used for DRA tie-breaks; per-source streams use the source index.
pub const TIE_BREAK_STREAM: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageState {
    Queued,
    SettingUp,
    Active,
    RetryWait,
    Delivered,
    Dropped,
}

#[derive(Clone, Debug)]
pub struct Message {
    pub id: MessageId,
    pub src: u32,
    pub dest: u32,
    pub size_bytes: u64,
    pub t_gen: SimTime,
    pub state: MessageState,
    pub measured: bool,
    pub attempts: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitState {
    SettingUp,
    Active,
    TearingDown,
    /// Blocked; prefix being released towards the source.
    Releasing,
    Done,
    Dropped,
    /// Held for the whole run; used to stage contention scenarios.
    Pinned,
}

#[derive(Clone, Debug)]
pub struct Circuit {
    pub id: CircuitId,
    /// `None` for pinned circuits.
    pub msg: Option<MessageId>,
    pub reserved: Vec<LinkId>,
    pub state: CircuitState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Event {
    Arrival {
        src: u32,
    },
    Inject {
        src: u32,
        dest: u32,
        size_bytes: u64,
    },
    SetupHop {
        circuit: CircuitId,
        stage: u32,
        line: u32,
    },
    SetupComplete {
        circuit: CircuitId,
    },
    AckAtSource {
        circuit: CircuitId,
    },
    Delivery {
        circuit: CircuitId,
    },
    ReleaseHop {
        circuit: CircuitId,
    },
    RetryReady {
        msg: MessageId,
    },
}

#[derive(Clone, Debug, Default)]
struct Source {
    queue: VecDeque<MessageId>,
    busy: bool,
    generated: u64,
}

/// Message counts by lifecycle position, over every message in the run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Conservation {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub queued: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.generated == self.delivered + self.dropped + self.in_flight + self.queued
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub stats: RunStats,
    pub summary: Summary,
    pub end_time: SimTime,
    pub events: u64,
    pub conservation: Conservation,
    pub trace: Option<Vec<String>>,
}

pub struct Simulation {
    cfg: SimConfig,
    net: BenesNetwork,
    traffic: TrafficParams,
    setup_time: SimTime,
    queue: EventQueue<Event>,
    links: Vec<Option<CircuitId>>,
    messages: Vec<Message>,
    circuits: Vec<Circuit>,
    live: BTreeSet<CircuitId>,
    sources: Vec<Source>,
    streams: Vec<RngStream>,
    tie_break: RngStream,
    stats: RunStats,
    warmup_per_source: u64,
    measured_generated: u64,
    arrivals_open: bool,
    audit: bool,
    trace: Option<Vec<String>>,
}

impl Simulation {
    /// A run driven by Poisson traffic at every source.
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        let mut sim = Self::idle(cfg)?;
        sim.arrivals_open = true;
        for src in 0..sim.net.terminals() {
            let gap = sim.traffic.next_arrival(&mut sim.streams[src as usize]);
            sim.queue.schedule(gap, Event::Arrival { src });
        }
        Ok(sim)
    }

    /// A run with no generated traffic; messages are added with
    /// [`inject`](Self::inject) and every injected message is measured.
    pub fn idle(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let net = build_network(cfg.k)?;
        let n = net.terminals();
        let traffic = TrafficParams::new(cfg.lambda, cfg.msg_bytes, cfg.bandwidth_bps)?;
        Ok(Simulation {
            setup_time: transmission_time(cfg.setup_bytes, cfg.bandwidth_bps)?,
            traffic,
            links: vec![None; net.link_count()],
            messages: Vec::new(),
            circuits: Vec::new(),
            live: BTreeSet::new(),
            sources: vec![Source::default(); n as usize],
            streams: (0..u64::from(n))
                .map(|i| derive_stream(cfg.seed, i))
                .collect(),
            tie_break: derive_stream(cfg.seed, TIE_BREAK_STREAM),
            stats: RunStats::new(n),
            warmup_per_source: cfg.warmup_per_source(),
            measured_generated: 0,
            arrivals_open: false,
            audit: cfg!(debug_assertions),
            trace: None,
            queue: EventQueue::new(),
            net,
            cfg: cfg.clone(),
        })
    }

    /// Record one text line per protocol event.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    /// Check link and circuit invariants after every event.
    pub fn with_audit(mut self, on: bool) -> Self {
        self.audit = on;
        self
    }

    pub fn network(&self) -> &BenesNetwork {
        &self.net
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn link_owner(&self, link: LinkId) -> Option<CircuitId> {
        self.links[self.net.link_index(link)]
    }

    pub fn reserved_link_count(&self) -> usize {
        self.links.iter().filter(|l| l.is_some()).count()
    }

    /// Schedule a message of `size_bytes` from `src` to `dest` generated at `at`.
    pub fn inject(&mut self, src: u32, dest: u32, size_bytes: u64, at: SimTime) -> Result<()> {
        let n = self.net.terminals();
        if src >= n || dest >= n {
            return Err(Error::arg(format!("terminals must be below {n}")));
        }
        if src == dest {
            return Err(Error::arg("destination must differ from source"));
        }
        if size_bytes == 0 {
            return Err(Error::arg("message size must be positive"));
        }
        if at < self.queue.now() {
            return Err(Error::arg("injection time is in the past"));
        }
        self.queue.schedule(
            at,
            Event::Inject {
                src,
                dest,
                size_bytes,
            },
        );
        Ok(())
    }

    /// Reserve every link of `path` for the rest of the run.
    pub fn pin_path(&mut self, path: &Path) -> Result<CircuitId> {
        let links = path.links(&self.net);
        if let Some(l) = links.iter().find(|l| self.link_owner(**l).is_some()) {
            return Err(Error::arg(format!("link {l} is already reserved")));
        }
        let id = self.circuits.len();
        for l in &links {
            let idx = self.net.link_index(*l);
            self.links[idx] = Some(id);
        }
        self.circuits.push(Circuit {
            id,
            msg: None,
            reserved: links,
            state: CircuitState::Pinned,
        });
        self.live.insert(id);
        Ok(id)
    }

    pub fn conservation(&self) -> Conservation {
        let mut c = Conservation {
            generated: self.messages.len() as u64,
            ..Default::default()
        };
        for m in &self.messages {
            match m.state {
                MessageState::Delivered => c.delivered += 1,
                MessageState::Dropped => c.dropped += 1,
                MessageState::Queued | MessageState::RetryWait => c.queued += 1,
                MessageState::SettingUp | MessageState::Active => c.in_flight += 1,
            }
        }
        c
    }

    /// Process one event. Returns false when the queue is empty.
    pub fn step(&mut self) -> Result<bool> {
        let Some((_, ev)) = self.queue.next_event() else {
            return Ok(false);
        };
        self.handle(ev)?;
        if self.audit {
            self.audit_links().map_err(Error::Runtime)?;
        }
        Ok(true)
    }

    /// Process events until the queue is empty.
    pub fn run_to_drain(&mut self) -> Result<()> {
        while self.step()? {}
        Ok(())
    }

    pub fn outcome(&self) -> RunOutcome {
        RunOutcome {
            stats: self.stats.clone(),
            summary: finalize(&self.stats, self.cfg.lambda),
            end_time: self.queue.now(),
            events: self.queue.delivered(),
            conservation: self.conservation(),
            trace: self.trace.clone(),
        }
    }

    /// Link exclusivity and prefix integrity check.
    pub fn audit_links(&self) -> std::result::Result<(), String> {
        let mut shadow: Vec<Option<CircuitId>> = vec![None; self.links.len()];
        for c in self.live.iter().map(|&id| &self.circuits[id]) {
            for l in &c.reserved {
                let idx = self.net.link_index(*l);
                if let Some(other) = shadow[idx] {
                    return Err(format!("link {l} held by circuits {other} and {}", c.id));
                }
                shadow[idx] = Some(c.id);
            }
            if let Some(first) = c.reserved.first() {
                let src = self.messages_src(c);
                if *first != self.net.injection_link(src) {
                    return Err(format!("circuit {} does not start at its source", c.id));
                }
            }
            for (b, pair) in c.reserved.windows(2).enumerate() {
                let stage = b as u32 + 1;
                let (sw_in, _) = self
                    .net
                    .switch_for_line(stage, pair[0].line)
                    .map_err(|e| e.to_string())?;
                let (sw_out, _) = self
                    .net
                    .switch_for_line(stage, pair[1].line)
                    .map_err(|e| e.to_string())?;
                if pair[0].boundary != b as u32 || pair[1].boundary != stage || sw_in != sw_out {
                    return Err(format!(
                        "circuit {} reserved set is not a wired prefix",
                        c.id
                    ));
                }
            }
        }
        if shadow != self.links {
            return Err("link table disagrees with circuit reservations".into());
        }
        Ok(())
    }

    fn messages_src(&self, c: &Circuit) -> u32 {
        match c.msg {
            Some(m) => self.messages[m].src,
            None => c.reserved[0].line,
        }
    }

    fn log(&mut self, line: std::fmt::Arguments<'_>) {
        if let Some(t) = self.trace.as_mut() {
            let mut s = String::new();
            write!(s, "{} ", self.queue.now()).unwrap();
            s.write_fmt(line).unwrap();
            t.push(s);
        }
    }

    fn reserve(&mut self, link: LinkId, circuit: CircuitId) {
        let idx = self.net.link_index(link);
        assert!(
            self.links[idx].is_none(),
            "link {link} reserved twice (held by {:?}, wanted by {circuit})",
            self.links[idx]
        );
        self.links[idx] = Some(circuit);
        self.circuits[circuit].reserved.push(link);
    }

    fn is_free(&self, link: LinkId) -> bool {
        self.link_owner(link).is_none()
    }

    fn handle(&mut self, ev: Event) -> Result<()> {
        match ev {
            Event::Arrival { src } => self.on_arrival(src),
            Event::Inject {
                src,
                dest,
                size_bytes,
            } => {
                let id = self.create_message(src, dest, size_bytes, true);
                self.enqueue(src, id)
            }
            Event::SetupHop {
                circuit,
                stage,
                line,
            } => self.on_setup_hop(circuit, stage, line),
            Event::SetupComplete { circuit } => self.on_setup_complete(circuit),
            Event::AckAtSource { circuit } => self.on_ack_at_source(circuit),
            Event::Delivery { circuit } => self.on_delivery(circuit),
            Event::ReleaseHop { circuit } => self.release_hop(circuit),
            Event::RetryReady { msg } => {
                self.messages[msg].state = MessageState::Queued;
                self.log(format_args!("retry msg={msg}"));
                let src = self.messages[msg].src;
                self.enqueue(src, msg)
            }
        }
    }

    fn create_message(
        &mut self,
        src: u32,
        dest: u32,
        size_bytes: u64,
        measured: bool,
    ) -> MessageId {
        let id = self.messages.len();
        self.messages.push(Message {
            id,
            src,
            dest,
            size_bytes,
            t_gen: self.queue.now(),
            state: MessageState::Queued,
            measured,
            attempts: 0,
        });
        if measured {
            self.stats.record_sent();
        }
        self.log(format_args!("arrival msg={id} src={src} dest={dest}"));
        id
    }

    fn on_arrival(&mut self, src: u32) -> Result<()> {
        if !self.arrivals_open {
            return Ok(());
        }
        let n = self.net.terminals();
        let stream = &mut self.streams[src as usize];
        let dest = sample_destination(stream, src, n)?;
        let gap = self.traffic.next_arrival(stream);

        let source = &mut self.sources[src as usize];
        let measured = source.generated >= self.warmup_per_source;
        source.generated += 1;
        let id = self.create_message(src, dest, self.cfg.msg_bytes, measured);
        if measured {
            self.measured_generated += 1;
            if self.measured_generated >= self.cfg.messages_target() {
                self.arrivals_open = false;
            }
        }
        if self.arrivals_open {
            self.queue.schedule_after(gap, Event::Arrival { src });
        }
        self.enqueue(src, id)
    }

    fn enqueue(&mut self, src: u32, msg: MessageId) -> Result<()> {
        self.sources[src as usize].queue.push_back(msg);
        self.try_start(src)
    }

    fn try_start(&mut self, src: u32) -> Result<()> {
        let source = &mut self.sources[src as usize];
        if source.busy {
            return Ok(());
        }
        let Some(msg) = source.queue.pop_front() else {
            return Ok(());
        };
        source.busy = true;
        self.begin_setup(msg)
    }

    /// Reserve the injection link and send the setup packet towards stage 1.
    fn begin_setup(&mut self, msg: MessageId) -> Result<()> {
        let src = self.messages[msg].src;
        let injection = self.net.injection_link(src);
        if !self.is_free(injection) {
            return Err(Error::Runtime(format!(
                "injection link of source {src} busy at setup start"
            )));
        }
        let id = self.circuits.len();
        self.circuits.push(Circuit {
            id,
            msg: Some(msg),
            reserved: Vec::with_capacity(self.net.stage_count() as usize + 1),
            state: CircuitState::SettingUp,
        });
        self.live.insert(id);
        self.reserve(injection, id);
        let m = &mut self.messages[msg];
        m.state = MessageState::SettingUp;
        m.attempts += 1;
        self.log(format_args!(
            "setup-start msg={msg} circuit={id} link={injection}"
        ));
        self.queue.schedule_after(
            self.setup_time + self.cfg.control_hop_latency,
            Event::SetupHop {
                circuit: id,
                stage: 1,
                line: src,
            },
        );
        Ok(())
    }

    fn on_setup_hop(&mut self, circuit: CircuitId, stage: u32, line: u32) -> Result<()> {
        let msg = self.circuits[circuit]
            .msg
            .expect("setup circuits carry a message");
        let dest = self.messages[msg].dest;
        let k = self.net.k();
        let (sw, _) = self.net.switch_for_line(stage, line)?;
        let upper = self.net.output_link(stage, sw, Port::Upper)?;
        let lower = self.net.output_link(stage, sw, Port::Lower)?;
        let avail = PortAvailability {
            upper_free: self.is_free(upper),
            lower_free: self.is_free(lower),
        };
        let decision = match self.cfg.algorithm {
            Algorithm::Dra => dra_select(
                stage,
                k,
                dest,
                avail,
                self.cfg.dra_tie_break,
                &mut self.tie_break,
            )?,
            Algorithm::Bcra => bcra_select(stage, k, dest, avail)?,
        };
        match decision {
            RoutingDecision::Take(port) => {
                let out = if port == Port::Upper { upper } else { lower };
                self.reserve(out, circuit);
                self.log(format_args!(
                    "setup-hop msg={msg} circuit={circuit} switch=R({sw},{stage}) port={port} link={out}"
                ));
                let next = if stage == self.net.stage_count() {
                    Event::SetupComplete { circuit }
                } else {
                    Event::SetupHop {
                        circuit,
                        stage: stage + 1,
                        line: out.line,
                    }
                };
                self.queue
                    .schedule_after(self.cfg.control_hop_latency, next);
            }
            RoutingDecision::Blocked => {
                self.log(format_args!(
                    "block msg={msg} circuit={circuit} switch=R({sw},{stage})"
                ));
                self.on_block(circuit)?;
            }
        }
        Ok(())
    }

    fn on_block(&mut self, circuit: CircuitId) -> Result<()> {
        let msg = self.circuits[circuit]
            .msg
            .expect("blocked circuit has a message");
        self.circuits[circuit].state = CircuitState::Releasing;
        let m = &mut self.messages[msg];
        if m.attempts > self.cfg.retry_limit {
            m.state = MessageState::Dropped;
            if m.measured {
                self.stats.record_drop();
            }
            self.log(format_args!("drop msg={msg}"));
        } else {
            m.state = MessageState::RetryWait;
        }
        self.release_hop(circuit)
    }

    fn on_setup_complete(&mut self, circuit: CircuitId) -> Result<()> {
        let msg = self.circuits[circuit]
            .msg
            .expect("setup circuits carry a message");
        self.circuits[circuit].state = CircuitState::Active;
        self.messages[msg].state = MessageState::Active;
        self.log(format_args!("setup-complete msg={msg} circuit={circuit}"));
        let hops = 2 * u64::from(self.net.k());
        self.queue.schedule_after(
            self.cfg.control_hop_latency * hops,
            Event::AckAtSource { circuit },
        );
        Ok(())
    }

    fn on_ack_at_source(&mut self, circuit: CircuitId) -> Result<()> {
        let msg = self.circuits[circuit]
            .msg
            .expect("active circuits carry a message");
        self.log(format_args!("ack msg={msg} circuit={circuit}"));
        let bytes = self.messages[msg].size_bytes;
        let hops = 2 * u64::from(self.net.k());
        let delay =
            transmission_time(bytes, self.cfg.bandwidth_bps)? + self.cfg.data_hop_latency * hops;
        self.queue
            .schedule_after(delay, Event::Delivery { circuit });
        Ok(())
    }

    fn on_delivery(&mut self, circuit: CircuitId) -> Result<()> {
        let msg = self.circuits[circuit]
            .msg
            .expect("active circuits carry a message");
        let now = self.queue.now();
        let m = &mut self.messages[msg];
        m.state = MessageState::Delivered;
        if m.measured {
            self.stats.record_delivery(m.dest, m.t_gen, now);
        }
        self.log(format_args!("deliver msg={msg} circuit={circuit}"));
        self.circuits[circuit].state = CircuitState::TearingDown;
        self.release_hop(circuit)
    }

    /// Free the most recently reserved link of `circuit`; continue towards the
    /// source one control hop later, or finish when the injection link is free.
    fn release_hop(&mut self, circuit: CircuitId) -> Result<()> {
        let link = self.circuits[circuit].reserved.pop().ok_or_else(|| {
            Error::Runtime(format!("circuit {circuit} released with nothing held"))
        })?;
        let idx = self.net.link_index(link);
        debug_assert_eq!(self.links[idx], Some(circuit));
        self.links[idx] = None;
        self.log(format_args!("release circuit={circuit} link={link}"));
        if !self.circuits[circuit].reserved.is_empty() {
            self.queue
                .schedule_after(self.cfg.control_hop_latency, Event::ReleaseHop { circuit });
            return Ok(());
        }

        let c = &mut self.circuits[circuit];
        c.state = match c.state {
            CircuitState::TearingDown => CircuitState::Done,
            CircuitState::Releasing => CircuitState::Dropped,
            other => {
                return Err(Error::Runtime(format!(
                    "circuit {circuit} released in state {other:?}"
                )))
            }
        };
        let msg = c.msg.expect("released circuit has a message");
        self.live.remove(&circuit);
        let src = self.messages[msg].src;
        if self.messages[msg].state == MessageState::RetryWait {
            self.queue
                .schedule_after(self.cfg.retry_backoff, Event::RetryReady { msg });
        }
        self.sources[src as usize].busy = false;
        self.try_start(src)
    }
}

/// Run one configuration to drain and summarize it.
pub fn run(cfg: &SimConfig) -> Result<RunOutcome> {
    let mut sim = Simulation::new(cfg)?;
    sim.run_to_drain()?;
    Ok(sim.outcome())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idle(k: u32) -> Simulation {
        let cfg = SimConfig {
            k,
            ..Default::default()
        };
        Simulation::idle(&cfg)
            .unwrap()
            .with_trace()
            .with_audit(true)
    }

    fn event_time(trace: &[String], kind: &str, msg: MessageId) -> Option<u64> {
        let tag = format!("msg={msg}");
        trace.iter().find_map(|l| {
            let mut f = l.split(' ');
            let t = f.next()?;
            (f.next()? == kind && f.any(|w| w == tag)).then(|| t.parse().unwrap())
        })
    }

    #[test]
    fn uncontended_timeline() {
        let mut sim = idle(4);
        sim.inject(3, 12, 64, SimTime::ZERO).unwrap();
        sim.run_to_drain().unwrap();
        let out = sim.outcome();
        let tr = out.trace.unwrap();

        let setup = 20_480; // 32 B at 12.5 Gbps
        let hop = 1_000;
        let first_hop = tr.iter().find(|l| l.contains("setup-hop")).unwrap();
        assert!(
            first_hop.starts_with(&format!("{} ", setup + hop)),
            "{first_hop}"
        );
        let complete = event_time(&tr, "setup-complete", 0).unwrap();
        assert_eq!(complete, setup + 8 * hop);
        let ack = event_time(&tr, "ack", 0).unwrap();
        assert_eq!(ack - complete, 8 * hop);
        let deliver = event_time(&tr, "deliver", 0).unwrap();
        assert_eq!(deliver - ack, 40_960);
        // teardown frees 8 links, one per control hop after the first
        assert_eq!(out.end_time.as_ps(), deliver + 7 * hop);
        assert_eq!(out.summary.mean_delay_ns, Some(deliver as f64 / 1_000.0));
        assert_eq!(sim.reserved_link_count(), 0);
    }

    #[test]
    fn two_by_two_timeline() {
        let cfg = SimConfig {
            k: 1,
            control_hop_latency: SimTime::ZERO,
            ..Default::default()
        };
        let mut sim = Simulation::idle(&cfg).unwrap().with_trace();
        sim.inject(0, 1, 32, SimTime::from_ns(5)).unwrap();
        sim.run_to_drain().unwrap();
        let out = sim.outcome();
        let hops = out
            .trace
            .unwrap()
            .iter()
            .filter(|l| l.contains("setup-hop"))
            .count();
        assert_eq!(hops, 1);
        // 5 ns generation + 20.48 ns setup + 20.48 ns payload
        assert_eq!(out.end_time, SimTime::from_ps(5_000 + 20_480 + 20_480));
        assert_eq!(out.summary.mean_delay_ns, Some(40.96));
    }

    #[test]
    fn data_hop_latency_adds_per_hop() {
        let cfg = SimConfig {
            k: 2,
            data_hop_latency: SimTime::from_ps(250),
            ..Default::default()
        };
        let mut sim = Simulation::idle(&cfg).unwrap().with_trace();
        sim.inject(0, 3, 64, SimTime::ZERO).unwrap();
        sim.run_to_drain().unwrap();
        let tr = sim.outcome().trace.unwrap();
        let ack = event_time(&tr, "ack", 0).unwrap();
        assert_eq!(
            event_time(&tr, "deliver", 0).unwrap() - ack,
            40_960 + 4 * 250
        );
    }

    #[test]
    fn circuit_becomes_active_once() {
        let mut sim = idle(3);
        sim.inject(1, 6, 64, SimTime::ZERO).unwrap();
        sim.run_to_drain().unwrap();
        let tr = sim.outcome().trace.unwrap();
        assert_eq!(
            tr.iter().filter(|l| l.contains(" setup-complete ")).count(),
            1
        );
        assert_eq!(sim.circuits()[0].state, CircuitState::Done);
        assert!(sim.circuits()[0].reserved.is_empty());
    }

    #[test]
    fn inject_validates_arguments() {
        let mut sim = idle(2);
        assert!(sim.inject(0, 0, 64, SimTime::ZERO).is_err());
        assert!(sim.inject(0, 4, 64, SimTime::ZERO).is_err());
        assert!(sim.inject(0, 1, 0, SimTime::ZERO).is_err());
    }

    #[test]
    fn audit_detects_corruption() {
        let mut sim = idle(2);
        sim.inject(0, 3, 64, SimTime::ZERO).unwrap();
        sim.step().unwrap();
        sim.step().unwrap();
        assert!(sim.audit_links().is_ok());
        let idx = sim.net.link_index(sim.net.ejection_link(2));
        sim.links[idx] = Some(0);
        assert!(sim.audit_links().is_err());
    }
}
