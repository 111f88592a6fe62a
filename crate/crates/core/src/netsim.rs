//! Seeded discrete-event simulator of TETRA base stations.
//!
//! Calls and packet-mode sessions arrive as Poisson streams, hold their
//! traffic channels for exponential times and queue FIFO when a station is
//! out of channels. Attachments, handovers, messages and received packets are
//! independent Poisson streams with Bernoulli outcomes. Every event updates
//! both the hourly counters and a separate ground-truth tally.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use chrono::{Duration, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::counters::{floor_hour, render_csv, CounterRecord, CounterSet, HOUR, TIMESTAMP_FORMAT};
use crate::error::{Error, Result};

pub const DEFAULT_SEMISLOTS_PER_HOUR: u64 = 36_000;

fn default_start() -> String {
    "2024-01-01T00:00:00".to_string()
}

fn default_semislots() -> u64 {
    DEFAULT_SEMISLOTS_PER_HOUR
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationConfig {
    pub tbs_id: String,
    pub tch_count: u32,
    #[serde(default)]
    pub group_call_rate: f64,
    #[serde(default)]
    pub indiv_half_duplex_rate: f64,
    #[serde(default)]
    pub indiv_full_duplex_rate: f64,
    /// Packet-mode channel reservations per second.
    #[serde(default)]
    pub packet_session_rate: f64,
    pub mean_holding: f64,
    /// Seconds a request may wait before it is abandoned; `None` waits forever.
    #[serde(default)]
    pub max_queue_time: Option<f64>,
    #[serde(default)]
    pub attach_rate: f64,
    #[serde(default)]
    pub handover_rate: f64,
    #[serde(default)]
    pub message_rate: f64,
    /// Data packets received per second.
    #[serde(default)]
    pub packet_rate: f64,
}

impl StationConfig {
    pub fn idle(tbs_id: impl Into<String>, tch_count: u32) -> Self {
        StationConfig {
            tbs_id: tbs_id.into(),
            tch_count,
            group_call_rate: 0.0,
            indiv_half_duplex_rate: 0.0,
            indiv_full_duplex_rate: 0.0,
            packet_session_rate: 0.0,
            mean_holding: 60.0,
            max_queue_time: None,
            attach_rate: 0.0,
            handover_rate: 0.0,
            message_rate: 0.0,
            packet_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultConfig {
    pub p_setup_fail: f64,
    pub p_drop: f64,
    pub p_ho_fail: f64,
    pub p_attach_fail: f64,
    pub p_msg_fail: f64,
    pub p_packet_corrupt: f64,
    /// Probability that an uplink message hits a random-access collision.
    pub p_collision: f64,
}

/// `count` talk groups; group `g` has members on stations
/// `g, g+1, …, g+spread-1` (mod the station count).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupTopology {
    pub count: usize,
    pub spread: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Simulated seconds.
    pub duration: u64,
    #[serde(default = "default_start")]
    pub start: String,
    pub stations: Vec<StationConfig>,
    #[serde(default)]
    pub faults: FaultConfig,
    #[serde(default)]
    pub groups: GroupTopology,
    /// Share of individual calls whose called party sits on another station.
    #[serde(default)]
    pub indiv_cross_cell_fraction: f64,
    #[serde(default = "half")]
    pub attach_ms_fraction: f64,
    #[serde(default = "half")]
    pub handover_group_fraction: f64,
    /// Share of messages sent by dispatchers/applications (downlink); the rest
    /// come from mobile subscribers (uplink).
    #[serde(default = "half")]
    pub message_dws_fraction: f64,
    #[serde(default = "default_semislots")]
    pub mcch_semislots_per_hour: u64,
}

impl SimConfig {
    pub fn new(seed: u64, duration: u64, stations: Vec<StationConfig>) -> Self {
        SimConfig {
            seed,
            duration,
            start: default_start(),
            stations,
            faults: FaultConfig::default(),
            groups: GroupTopology::default(),
            indiv_cross_cell_fraction: 0.0,
            attach_ms_fraction: 0.5,
            handover_group_fraction: 0.5,
            message_dws_fraction: 0.5,
            mcch_semislots_per_hour: DEFAULT_SEMISLOTS_PER_HOUR,
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_slice(bytes)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn start_time(&self) -> Result<NaiveDateTime> {
        let ts = NaiveDateTime::parse_from_str(&self.start, TIMESTAMP_FORMAT)
            .map_err(|e| Error::Config(format!("start `{}`: {e}", self.start)))?;
        if floor_hour(ts) != ts {
            return Err(Error::Config("start must be aligned to a clock hour".into()));
        }
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.duration == 0 {
            return cfg_err("duration must be positive".into());
        }
        if self.stations.is_empty() {
            return cfg_err("at least one station is required".into());
        }
        self.start_time()?;
        let probs = [
            ("p_setup_fail", self.faults.p_setup_fail),
            ("p_drop", self.faults.p_drop),
            ("p_ho_fail", self.faults.p_ho_fail),
            ("p_attach_fail", self.faults.p_attach_fail),
            ("p_msg_fail", self.faults.p_msg_fail),
            ("p_packet_corrupt", self.faults.p_packet_corrupt),
            ("p_collision", self.faults.p_collision),
            ("indiv_cross_cell_fraction", self.indiv_cross_cell_fraction),
            ("attach_ms_fraction", self.attach_ms_fraction),
            ("handover_group_fraction", self.handover_group_fraction),
            ("message_dws_fraction", self.message_dws_fraction),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return cfg_err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.groups.count > 0 && (self.groups.spread == 0 || self.groups.spread > self.stations.len()) {
            return cfg_err(format!(
                "group spread must lie in 1..={}, got {}",
                self.stations.len(),
                self.groups.spread
            ));
        }
        let mut ids = std::collections::BTreeSet::new();
        for s in &self.stations {
            if !ids.insert(s.tbs_id.as_str()) {
                return cfg_err(format!("duplicate station {}", s.tbs_id));
            }
            if s.tbs_id.is_empty() || s.tbs_id.contains(',') {
                return cfg_err(format!("invalid station id `{}`", s.tbs_id));
            }
            if s.tch_count == 0 {
                return cfg_err(format!("{}: tch_count must be at least 1", s.tbs_id));
            }
            if s.indiv_full_duplex_rate > 0.0 && s.tch_count < 2 {
                return cfg_err(format!("{}: full-duplex calls need at least 2 channels", s.tbs_id));
            }
            let rates = [
                s.group_call_rate,
                s.indiv_half_duplex_rate,
                s.indiv_full_duplex_rate,
                s.packet_session_rate,
                s.attach_rate,
                s.handover_rate,
                s.message_rate,
                s.packet_rate,
            ];
            if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return cfg_err(format!("{}: rates must be finite and non-negative", s.tbs_id));
            }
            if !(s.mean_holding.is_finite() && s.mean_holding > 0.0) {
                return cfg_err(format!("{}: mean_holding must be positive", s.tbs_id));
            }
            if let Some(q) = s.max_queue_time {
                if q.is_nan() || q < 0.0 {
                    return cfg_err(format!("{}: max_queue_time must be non-negative", s.tbs_id));
                }
            }
        }
        Ok(())
    }
}

/// Attempts and failures of one event class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub attempts: u64,
    pub failures: u64,
}

impl Tally {
    fn record(&mut self, failed: bool) {
        self.attempts += 1;
        self.failures += failed as u64;
    }

    pub fn fraction(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.failures as f64 / self.attempts as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StationTruth {
    pub tbs_id: String,
    pub channel_requests: u64,
    pub queued_requests: u64,
    pub abandoned_requests: u64,
    /// Exact total of realized waits, seconds.
    pub total_wait: f64,
    pub group_setup: Tally,
    pub indiv_setup: Tally,
    /// Established group calls that ended (attempts) or were dropped (failures).
    pub group_process: Tally,
    pub indiv_process: Tally,
    pub indiv_handover: Tally,
    pub group_handover: Tally,
    pub ms_attach: Tally,
    pub swmi_attach: Tally,
    pub dws_messages: Tally,
    pub ms_messages: Tally,
    pub packets: Tally,
    pub collisions: u64,
}

impl StationTruth {
    pub fn wait_probability(&self) -> Option<f64> {
        (self.channel_requests > 0).then(|| self.queued_requests as f64 / self.channel_requests as f64)
    }

    pub fn mean_wait(&self) -> Option<f64> {
        (self.channel_requests > 0).then(|| self.total_wait / self.channel_requests as f64)
    }

    pub fn mean_wait_queued(&self) -> Option<f64> {
        (self.queued_requests > 0).then(|| self.total_wait / self.queued_requests as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub seed: u64,
    pub duration: u64,
    pub stations: Vec<StationTruth>,
}

impl SimTruth {
    pub fn station(&self, tbs_id: &str) -> Option<&StationTruth> {
        self.stations.iter().find(|s| s.tbs_id == tbs_id)
    }
}

/// Counter records ordered by station (configuration order), then hour.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub records: Vec<CounterRecord>,
    pub truth: SimTruth,
}

pub fn emit_counters(output: &SimOutput) -> String {
    render_csv(&output.records)
}

pub fn emit_truth(output: &SimOutput) -> Result<String> {
    Ok(serde_json::to_string_pretty(&output.truth)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CallKind {
    Group,
    IndivHalfDuplex,
    IndivFullDuplex,
    PacketSession,
}

impl CallKind {
    const ALL: [CallKind; 4] = [
        CallKind::Group,
        CallKind::IndivHalfDuplex,
        CallKind::IndivFullDuplex,
        CallKind::PacketSession,
    ];

    fn rate(self, s: &StationConfig) -> f64 {
        match self {
            CallKind::Group => s.group_call_rate,
            CallKind::IndivHalfDuplex => s.indiv_half_duplex_rate,
            CallKind::IndivFullDuplex => s.indiv_full_duplex_rate,
            CallKind::PacketSession => s.packet_session_rate,
        }
    }

    fn is_group(self) -> bool {
        self == CallKind::Group
    }

    fn is_voice(self) -> bool {
        self != CallKind::PacketSession
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PointKind {
    Attach,
    Handover,
    Message,
    Packet,
}

impl PointKind {
    const ALL: [PointKind; 4] = [PointKind::Attach, PointKind::Handover, PointKind::Message, PointKind::Packet];

    fn rate(self, s: &StationConfig) -> f64 {
        match self {
            PointKind::Attach => s.attach_rate,
            PointKind::Handover => s.handover_rate,
            PointKind::Message => s.message_rate,
            PointKind::Packet => s.packet_rate,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Arrival(usize, CallKind),
    Point(usize, PointKind),
    Release(u64),
    Abandon(u64),
}

struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap pops the earliest event first
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Request {
    kind: CallKind,
    needs: Vec<(usize, u32)>,
    arrival: f64,
    queued_at: Vec<usize>,
}

struct ActiveCall {
    kind: CallKind,
    needs: Vec<(usize, u32)>,
    start: f64,
    dropped: bool,
}

#[derive(Default, Clone)]
struct HourAccum {
    counters: CounterSet,
    gcbt: f64,
    icbt: f64,
    pmbt: f64,
    qwt: f64,
    downlink_msgs: u64,
    uplink_msgs: u64,
}

struct StationState {
    free: u32,
    waiting_involving: usize,
    queue_len: u64,
    peak_hour: usize,
    hours: Vec<HourAccum>,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    now: f64,
    seq: u64,
    heap: BinaryHeap<Scheduled>,
    stations: Vec<StationState>,
    truth: Vec<StationTruth>,
    groups_of: Vec<Vec<usize>>,
    group_members: Vec<Vec<usize>>,
    waiting: BTreeMap<u64, Request>,
    active: BTreeMap<u64, ActiveCall>,
    next_id: u64,
    n_hours: usize,
}

/// Runs one simulation. Identical configurations, seed included, give
/// identical output.
pub fn simulate(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let start = config.start_time()?;
    let n_hours = config.duration.div_ceil(HOUR) as usize;

    let n = config.stations.len();
    let mut group_members = Vec::new();
    let mut groups_of = vec![Vec::new(); n];
    for g in 0..config.groups.count {
        let members: Vec<usize> = (0..config.groups.spread).map(|j| (g + j) % n).collect();
        for &m in &members {
            groups_of[m].push(g);
        }
        group_members.push(members);
    }

    let mut sim = Sim {
        cfg: config,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        now: 0.0,
        seq: 0,
        heap: BinaryHeap::new(),
        stations: config
            .stations
            .iter()
            .map(|s| StationState {
                free: s.tch_count,
                waiting_involving: 0,
                queue_len: 0,
                peak_hour: 0,
                hours: vec![HourAccum::default(); n_hours],
            })
            .collect(),
        truth: config
            .stations
            .iter()
            .map(|s| StationTruth {
                tbs_id: s.tbs_id.clone(),
                ..Default::default()
            })
            .collect(),
        groups_of,
        group_members,
        waiting: BTreeMap::new(),
        active: BTreeMap::new(),
        next_id: 0,
        n_hours,
    };
    sim.run();
    Ok(sim.finish(start))
}

impl Sim<'_> {
    fn duration(&self) -> f64 {
        self.cfg.duration as f64
    }

    fn hour_of(&self, t: f64) -> usize {
        ((t / HOUR as f64) as usize).min(self.n_hours - 1)
    }

    fn schedule(&mut self, time: f64, event: Event) {
        if time < self.duration() {
            self.seq += 1;
            self.heap.push(Scheduled {
                time,
                seq: self.seq,
                event,
            });
        }
    }

    fn exp(&mut self, rate: f64) -> f64 {
        Exp::new(rate).expect("positive rate").sample(&mut self.rng)
    }

    fn run(&mut self) {
        for i in 0..self.cfg.stations.len() {
            for kind in CallKind::ALL {
                let rate = kind.rate(&self.cfg.stations[i]);
                if rate > 0.0 {
                    let t = self.exp(rate);
                    self.schedule(t, Event::Arrival(i, kind));
                }
            }
            for kind in PointKind::ALL {
                let rate = kind.rate(&self.cfg.stations[i]);
                if rate > 0.0 {
                    let t = self.exp(rate);
                    self.schedule(t, Event::Point(i, kind));
                }
            }
        }
        while let Some(Scheduled { time, event, .. }) = self.heap.pop() {
            self.now = time;
            match event {
                Event::Arrival(i, kind) => {
                    let t = time + self.exp(kind.rate(&self.cfg.stations[i]));
                    self.schedule(t, Event::Arrival(i, kind));
                    self.arrive(i, kind);
                }
                Event::Point(i, kind) => {
                    let t = time + self.exp(kind.rate(&self.cfg.stations[i]));
                    self.schedule(t, Event::Point(i, kind));
                    self.point(i, kind);
                }
                Event::Release(id) => self.release(id),
                Event::Abandon(id) => self.abandon(id),
            }
        }
        self.now = self.duration();
    }

    fn counters(&mut self, station: usize, t: f64) -> &mut CounterSet {
        let h = self.hour_of(t);
        &mut self.stations[station].hours[h].counters
    }

    fn needs_for(&mut self, origin: usize, kind: CallKind) -> Vec<(usize, u32)> {
        let n = self.cfg.stations.len();
        match kind {
            CallKind::Group => {
                let groups = &self.groups_of[origin];
                if groups.is_empty() {
                    vec![(origin, 1)]
                } else {
                    let g = groups[self.rng.random_range(0..groups.len())];
                    self.group_members[g].iter().map(|&s| (s, 1)).collect()
                }
            }
            CallKind::IndivHalfDuplex | CallKind::IndivFullDuplex => {
                let cross = n > 1
                    && self.cfg.indiv_cross_cell_fraction > 0.0
                    && self.rng.random_bool(self.cfg.indiv_cross_cell_fraction);
                if cross {
                    let mut other = self.rng.random_range(0..n - 1);
                    if other >= origin {
                        other += 1;
                    }
                    vec![(origin, 1), (other, 1)]
                } else if kind == CallKind::IndivFullDuplex {
                    vec![(origin, 2)]
                } else {
                    vec![(origin, 1)]
                }
            }
            CallKind::PacketSession => vec![(origin, 1)],
        }
    }

    fn fits(&self, needs: &[(usize, u32)]) -> bool {
        needs.iter().all(|&(s, c)| self.stations[s].free >= c)
    }

    fn arrive(&mut self, origin: usize, kind: CallKind) {
        let now = self.now;
        let needs = self.needs_for(origin, kind);
        for &(s, _) in &needs {
            self.counters(s, now).crr += 1;
            self.truth[s].channel_requests += 1;
        }
        let blocked = needs.iter().any(|&(s, _)| self.stations[s].waiting_involving > 0);
        if !blocked && self.fits(&needs) {
            self.grant(kind, needs);
            return;
        }

        let queued_at: Vec<usize> = needs
            .iter()
            .filter(|&&(s, c)| self.stations[s].waiting_involving > 0 || self.stations[s].free < c)
            .map(|&(s, _)| s)
            .collect();
        for &s in &queued_at {
            self.counters(s, now).qcrr += 1;
            self.truth[s].queued_requests += 1;
            self.touch_peak(s);
            let st = &mut self.stations[s];
            st.queue_len += 1;
            let h = st.peak_hour;
            let c = &mut st.hours[h].counters;
            c.psqr = c.psqr.max(st.queue_len);
        }
        for &(s, _) in &needs {
            self.stations[s].waiting_involving += 1;
        }
        let id = self.next_id;
        self.next_id += 1;
        if let Some(limit) = self.cfg.stations[origin].max_queue_time {
            self.schedule(now + limit, Event::Abandon(id));
        }
        self.waiting.insert(
            id,
            Request {
                kind,
                needs,
                arrival: now,
                queued_at,
            },
        );
    }

    /// Brings the hourly queue-length peak of `s` forward to the current hour.
    fn touch_peak(&mut self, s: usize) {
        let h = self.hour_of(self.now);
        let st = &mut self.stations[s];
        while st.peak_hour < h {
            st.peak_hour += 1;
            let len = st.queue_len;
            let c = &mut st.hours[st.peak_hour].counters;
            c.psqr = c.psqr.max(len);
        }
    }

    fn leave_queue(&mut self, req: &Request, until: f64) {
        let wait = until - req.arrival;
        let h = self.hour_of(req.arrival);
        for &s in &req.queued_at {
            self.touch_peak(s);
            self.stations[s].queue_len -= 1;
            self.stations[s].hours[h].qwt += wait;
            self.truth[s].total_wait += wait;
        }
        for &(s, _) in &req.needs {
            self.stations[s].waiting_involving -= 1;
        }
    }

    fn grant(&mut self, kind: CallKind, needs: Vec<(usize, u32)>) {
        let now = self.now;
        if kind.is_voice() {
            let failed = self.cfg.faults.p_setup_fail > 0.0 && self.rng.random_bool(self.cfg.faults.p_setup_fail);
            self.count_setup(kind, &needs, failed);
            if failed {
                return;
            }
        }
        for &(s, c) in &needs {
            self.stations[s].free -= c;
        }
        let mean = self.cfg.stations[needs[0].0].mean_holding;
        let holding = self.exp(1.0 / mean);
        let dropped =
            kind.is_voice() && self.cfg.faults.p_drop > 0.0 && self.rng.random_bool(self.cfg.faults.p_drop);
        let end = if dropped {
            now + self.rng.random::<f64>() * holding
        } else {
            now + holding
        };
        let id = self.next_id;
        self.next_id += 1;
        self.active.insert(
            id,
            ActiveCall {
                kind,
                needs,
                start: now,
                dropped,
            },
        );
        self.schedule(end, Event::Release(id));
    }

    fn count_setup(&mut self, kind: CallKind, needs: &[(usize, u32)], failed: bool) {
        let now = self.now;
        for &(s, _) in needs {
            let c = self.counters(s, now);
            match (kind.is_group(), failed) {
                (true, false) => c.spgc += 1,
                (true, true) => c.upgc += 1,
                (false, false) => c.spic += 1,
                (false, true) => c.upic += 1,
            }
            let t = &mut self.truth[s];
            if kind.is_group() {
                t.group_setup.record(failed);
            } else {
                t.indiv_setup.record(failed);
            }
        }
    }

    fn add_busy(&mut self, call: &ActiveCall, until: f64) {
        for &(s, c) in &call.needs {
            let mut t = call.start;
            while t < until {
                let h = self.hour_of(t);
                let boundary = ((h + 1) as u64 * HOUR) as f64;
                let seg_end = if h + 1 == self.n_hours { until } else { until.min(boundary) };
                let busy = (seg_end - t) * c as f64;
                let acc = &mut self.stations[s].hours[h];
                match call.kind {
                    CallKind::Group => acc.gcbt += busy,
                    CallKind::PacketSession => acc.pmbt += busy,
                    _ => acc.icbt += busy,
                }
                t = seg_end;
            }
        }
    }

    fn release(&mut self, id: u64) {
        let now = self.now;
        let call = self.active.remove(&id).expect("released call is active");
        self.add_busy(&call, now);
        for &(s, c) in &call.needs {
            self.stations[s].free += c;
            if call.kind.is_voice() {
                let counters = self.counters(s, now);
                match (call.kind.is_group(), call.dropped) {
                    (true, false) => counters.segc += 1,
                    (true, true) => counters.uegc += 1,
                    (false, false) => counters.seic += 1,
                    (false, true) => counters.ueic += 1,
                }
                let t = &mut self.truth[s];
                if call.kind.is_group() {
                    t.group_process.record(call.dropped);
                } else {
                    t.indiv_process.record(call.dropped);
                }
            }
        }
        self.dispatch();
    }

    fn abandon(&mut self, id: u64) {
        let Some(req) = self.waiting.remove(&id) else {
            return;
        };
        let now = self.now;
        self.leave_queue(&req, now);
        for &(s, _) in &req.needs {
            self.truth[s].abandoned_requests += 1;
        }
        if req.kind.is_voice() {
            self.count_setup(req.kind, &req.needs, true);
        }
        self.dispatch();
    }

    /// Serves waiting requests in arrival order. A request that cannot start
    /// blocks every station it involves for the requests behind it.
    fn dispatch(&mut self) {
        loop {
            let mut blocked = vec![false; self.stations.len()];
            let mut ready = Vec::new();
            for (&id, req) in &self.waiting {
                if req.needs.iter().any(|&(s, _)| blocked[s]) || !self.fits_after(&req.needs, &ready) {
                    for &(s, _) in &req.needs {
                        blocked[s] = true;
                    }
                } else {
                    ready.push(id);
                }
                if blocked.iter().all(|b| *b) {
                    break;
                }
            }
            if ready.is_empty() {
                return;
            }
            // a granted voice call may fail setup and hand its channels straight
            // back, so go round again until nothing more can start
            for id in ready {
                let req = self.waiting.remove(&id).expect("ready request is waiting");
                let now = self.now;
                self.leave_queue(&req, now);
                self.grant(req.kind, req.needs);
            }
        }
    }

    fn fits_after(&self, needs: &[(usize, u32)], ready: &[u64]) -> bool {
        needs.iter().all(|&(s, c)| {
            let taken: u32 = ready
                .iter()
                .flat_map(|id| self.waiting[id].needs.iter())
                .filter(|&&(rs, _)| rs == s)
                .map(|&(_, rc)| rc)
                .sum();
            self.stations[s].free >= taken + c
        })
    }

    fn point(&mut self, i: usize, kind: PointKind) {
        let now = self.now;
        let f = self.cfg.faults.clone();
        match kind {
            PointKind::Attach => {
                let by_ms = self.rng.random_bool(self.cfg.attach_ms_fraction);
                let failed = self.rng.random_bool(f.p_attach_fail);
                let c = self.counters(i, now);
                if by_ms {
                    c.gau += 1;
                    c.ugau += failed as u64;
                    self.truth[i].ms_attach.record(failed);
                } else {
                    c.gas += 1;
                    c.ugas += failed as u64;
                    self.truth[i].swmi_attach.record(failed);
                }
            }
            PointKind::Handover => {
                let group = self.rng.random_bool(self.cfg.handover_group_fraction);
                let failed = self.rng.random_bool(f.p_ho_fail);
                let c = self.counters(i, now);
                if group {
                    c.gch += 1;
                    c.ugch += failed as u64;
                    self.truth[i].group_handover.record(failed);
                } else {
                    c.ich += 1;
                    c.uich += failed as u64;
                    self.truth[i].indiv_handover.record(failed);
                }
            }
            PointKind::Message => {
                let from_dws = self.rng.random_bool(self.cfg.message_dws_fraction);
                let failed = self.rng.random_bool(f.p_msg_fail);
                let collided = !from_dws && self.rng.random_bool(f.p_collision);
                let h = self.hour_of(now);
                let acc = &mut self.stations[i].hours[h];
                if from_dws {
                    acc.counters.dam += 1;
                    acc.counters.udam += failed as u64;
                    acc.downlink_msgs += 1;
                    self.truth[i].dws_messages.record(failed);
                } else {
                    acc.counters.um += 1;
                    acc.counters.uum += failed as u64;
                    acc.counters.rac += collided as u64;
                    acc.uplink_msgs += 1;
                    self.truth[i].ms_messages.record(failed);
                    self.truth[i].collisions += collided as u64;
                }
            }
            PointKind::Packet => {
                let corrupt = self.rng.random_bool(f.p_packet_corrupt);
                let c = self.counters(i, now);
                if corrupt {
                    c.crp += 1;
                } else {
                    c.srp += 1;
                }
                self.truth[i].packets.record(corrupt);
            }
        }
    }

    fn finish(mut self, start: NaiveDateTime) -> SimOutput {
        let end = self.duration();
        let active = std::mem::take(&mut self.active);
        for call in active.values() {
            self.add_busy(call, end);
        }
        let waiting = std::mem::take(&mut self.waiting);
        for req in waiting.values() {
            self.leave_queue(req, end);
        }
        for s in 0..self.stations.len() {
            self.touch_peak(s);
        }

        let mut records = Vec::with_capacity(self.stations.len() * self.n_hours);
        for (i, st) in self.stations.iter().enumerate() {
            let cfg = &self.cfg.stations[i];
            for (h, acc) in st.hours.iter().enumerate() {
                let window_len = (self.cfg.duration - h as u64 * HOUR).min(HOUR);
                let mut c = acc.counters;
                c.service_time = window_len;
                c.pc = cfg.tch_count as u64 * window_len;
                c.gcbt = acc.gcbt.floor() as u64;
                c.icbt = acc.icbt.floor() as u64;
                c.pmbt = acc.pmbt.floor() as u64;
                while c.traffic() > c.pc {
                    // float accumulation can overshoot a saturated hour by an ulp
                    if c.gcbt > 0 {
                        c.gcbt -= 1;
                    } else if c.icbt > 0 {
                        c.icbt -= 1;
                    } else {
                        c.pmbt -= 1;
                    }
                }
                c.qwt = acc.qwt.round() as u64;
                let budget = self.cfg.mcch_semislots_per_hour * window_len / HOUR;
                c.dss = budget;
                c.urs = budget;
                c.dus = acc.downlink_msgs.min(budget);
                c.uus = acc.uplink_msgs.min(budget);
                records.push(CounterRecord {
                    tbs_id: cfg.tbs_id.clone(),
                    window_start: start + Duration::seconds((h as u64 * HOUR) as i64),
                    window_len,
                    counters: c,
                });
            }
        }
        SimOutput {
            records,
            truth: SimTruth {
                seed: self.cfg.seed,
                duration: self.cfg.duration,
                stations: self.truth,
            },
        }
    }
}
