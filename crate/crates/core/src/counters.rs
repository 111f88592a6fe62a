//! Per-TBS performance counter records: CSV/JSON ingestion, validation and
//! an hour-indexed store.
//!
//! Time counters are integer seconds and busy/capacity counters are integer
//! channel-seconds. Timestamps are naive local time of the network and are
//! never converted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;
use std::ops::Deref;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOUR: u64 = 3600;
pub const DAY: u64 = 86_400;
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

macro_rules! counter_set {
    ($($(#[$doc:meta])* $name:ident),* $(,)?) => {
        /// One window's worth of event and time counters for a base station.
        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub struct CounterSet {
            $($(#[$doc])* pub $name: u64,)*
        }

        impl CounterSet {
            /// Counter names in canonical column order.
            pub const FIELDS: &'static [&'static str] = &[$(stringify!($name)),*];
            pub const COUNT: usize = Self::FIELDS.len();

            pub fn to_array(&self) -> [u64; Self::COUNT] {
                [$(self.$name),*]
            }

            pub fn from_array(values: [u64; Self::COUNT]) -> Self {
                let mut it = values.into_iter();
                CounterSet { $($name: it.next().unwrap_or_default(),)* }
            }
        }
    };
}

counter_set! {
    /// Seconds the station was in service during the window.
    service_time,
    /// Group calls busy time.
    gcbt,
    /// Individual calls busy time.
    icbt,
    /// Packet mode busy time.
    pmbt,
    /// Provided capacity: channel-seconds offered by all TCHs.
    pc,
    /// Channel reservation requests.
    crr,
    /// Queued channel reservation requests.
    qcrr,
    /// Total queuing waiting time, seconds.
    qwt,
    /// Peak of simultaneously queued requests.
    psqr,
    dss,
    dus,
    urs,
    uus,
    /// Random access collisions on the uplink MCCH.
    rac,
    gau,
    ugau,
    gas,
    ugas,
    ich,
    uich,
    gch,
    ugch,
    spgc,
    upgc,
    spic,
    upic,
    segc,
    uegc,
    seic,
    ueic,
    dam,
    udam,
    um,
    uum,
    srp,
    crp,
}

const PSQR_INDEX: usize = 8;

impl CounterSet {
    /// Combined traffic-channel busy time (group + individual + packet).
    pub fn traffic(&self) -> u64 {
        self.gcbt + self.icbt + self.pmbt
    }

    /// Accumulates another window into this one. Everything is summed
    /// except `psqr`, which is a peak and takes the maximum.
    pub fn accumulate(&mut self, other: &CounterSet) {
        let mut acc = self.to_array();
        for (i, (a, b)) in acc.iter_mut().zip(other.to_array()).enumerate() {
            *a = if i == PSQR_INDEX { (*a).max(b) } else { a.saturating_add(b) };
        }
        *self = CounterSet::from_array(acc);
    }

    fn check(&self) -> Result<()> {
        let busy = self.gcbt as u128 + self.icbt as u128 + self.pmbt as u128;
        if busy > self.pc as u128 {
            return Err(violation("pc", format!("busy time {busy} exceeds provided capacity {}", self.pc)));
        }
        let pools: [(&'static str, u64, u64, &str); 9] = [
            ("qcrr", self.qcrr, self.crr, "queued exceeds total requests"),
            ("dus", self.dus, self.dss, "used exceeds sent downlink semislots"),
            ("uus", self.uus, self.urs, "used exceeds reserved uplink semislots"),
            ("ugau", self.ugau, self.gau, "unsuccessful exceeds MS attach requests"),
            ("ugas", self.ugas, self.gas, "unsuccessful exceeds SwMI attach requests"),
            ("uich", self.uich, self.ich, "unsuccessful exceeds individual call handovers"),
            ("ugch", self.ugch, self.gch, "unsuccessful exceeds group call handovers"),
            ("udam", self.udam, self.dam, "non-delivered exceeds DWS/application messages"),
            ("uum", self.uum, self.um, "non-delivered exceeds MS messages"),
        ];
        for (field, part, pool, detail) in pools {
            if part > pool {
                return Err(violation(field, format!("{detail} ({part} > {pool})")));
            }
        }
        Ok(())
    }
}

fn violation(field: &'static str, detail: impl Into<String>) -> Error {
    Error::InvariantViolation {
        field,
        detail: detail.into(),
    }
}

mod timestamp {
    use super::TIMESTAMP_FORMAT;
    use chrono::NaiveDateTime;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&ts.format(TIMESTAMP_FORMAT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let raw = String::deserialize(d)?;
        NaiveDateTime::parse_from_str(&raw, TIMESTAMP_FORMAT).map_err(de::Error::custom)
    }
}

fn default_window_len() -> u64 {
    HOUR
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterRecord {
    pub tbs_id: String,
    #[serde(with = "timestamp")]
    pub window_start: NaiveDateTime,
    #[serde(default = "default_window_len")]
    pub window_len: u64,
    #[serde(flatten)]
    pub counters: CounterSet,
}

impl CounterRecord {
    pub fn new(tbs_id: impl Into<String>, window_start: NaiveDateTime, counters: CounterSet) -> Self {
        CounterRecord {
            tbs_id: tbs_id.into(),
            window_start,
            window_len: HOUR,
            counters,
        }
    }

    pub fn date(&self) -> NaiveDate {
        self.window_start.date()
    }

    pub fn hour(&self) -> u32 {
        self.window_start.hour()
    }

    fn hour_start(&self) -> NaiveDateTime {
        floor_hour(self.window_start)
    }
}

pub fn floor_hour(ts: NaiveDateTime) -> NaiveDateTime {
    ts.date().and_time(NaiveTime::from_hms_opt(ts.hour(), 0, 0).expect("valid hour"))
}

/// A record whose counters and window satisfy every consistency rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedRecord(CounterRecord);

impl ValidatedRecord {
    pub fn into_inner(self) -> CounterRecord {
        self.0
    }
}

impl Deref for ValidatedRecord {
    type Target = CounterRecord;

    fn deref(&self) -> &CounterRecord {
        &self.0
    }
}

/// Checks every counter invariant and the window geometry, reporting the
/// first violation found.
pub fn validate(record: CounterRecord) -> Result<ValidatedRecord> {
    if record.tbs_id.is_empty() {
        return Err(violation("tbs_id", "empty station identifier"));
    }
    if record.window_len == 0 || record.window_len > HOUR {
        return Err(violation(
            "window_len",
            format!("window length {} outside 1..=3600 seconds", record.window_len),
        ));
    }
    let offset = record.window_start.signed_duration_since(record.hour_start()).num_seconds() as u64;
    if offset + record.window_len > HOUR {
        return Err(violation("window_start", "window crosses a clock-hour boundary"));
    }
    record.counters.check()?;
    if record.counters.service_time > record.window_len {
        return Err(violation(
            "service_time",
            format!("service time {} exceeds window length {}", record.counters.service_time, record.window_len),
        ));
    }
    Ok(ValidatedRecord(record))
}

pub fn csv_header() -> Vec<&'static str> {
    let mut cols = vec!["tbs_id", "window_start", "window_len"];
    cols.extend_from_slice(CounterSet::FIELDS);
    cols
}

/// Parses the counter CSV format. Rows are returned in input order and are
/// not validated.
pub fn parse_counters<R: Read>(source: R) -> Result<Vec<CounterRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let expected = csv_header();
    let mut rows = reader.records();

    let header = match rows.next() {
        None => return Err(Error::UnknownColumn("missing header row".into())),
        Some(h) => h.map_err(|e| malformed(1, e.to_string()))?,
    };
    for (i, want) in expected.iter().enumerate() {
        match header.get(i) {
            Some(got) if got == *want => {}
            Some(got) => return Err(Error::UnknownColumn(got.to_string())),
            None => return Err(Error::UnknownColumn(format!("missing column {want}"))),
        }
    }
    if header.len() > expected.len() {
        return Err(Error::UnknownColumn(header[expected.len()].to_string()));
    }

    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| malformed(0, e.to_string()))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != expected.len() {
            return Err(malformed(
                line,
                format!("expected {} columns, found {}", expected.len(), row.len()),
            ));
        }
        let window_start = NaiveDateTime::parse_from_str(&row[1], TIMESTAMP_FORMAT)
            .map_err(|e| malformed(line, format!("window_start `{}`: {e}", &row[1])))?;
        let mut values = [0u64; CounterSet::COUNT];
        let window_len = parse_u64(&row[2], "window_len", line)?;
        for (i, name) in CounterSet::FIELDS.iter().enumerate() {
            values[i] = parse_u64(&row[i + 3], name, line)?;
        }
        out.push(CounterRecord {
            tbs_id: row[0].to_string(),
            window_start,
            window_len,
            counters: CounterSet::from_array(values),
        });
    }
    Ok(out)
}

fn parse_u64(raw: &str, field: &str, line: usize) -> Result<u64> {
    raw.parse::<u64>()
        .map_err(|_| malformed(line, format!("field `{field}`: non-numeric value `{raw}`")))
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        line,
        reason: reason.into(),
    }
}

/// Parses the JSON array-of-objects mirror of the CSV format.
pub fn parse_counters_json<R: Read>(source: R) -> Result<Vec<CounterRecord>> {
    let items: Vec<serde_json::Map<String, serde_json::Value>> = serde_json::from_reader(source)?;
    let allowed: HashSet<&str> = csv_header().into_iter().collect();
    items
        .into_iter()
        .enumerate()
        .map(|(i, obj)| {
            if let Some(key) = obj.keys().find(|k| !allowed.contains(k.as_str())) {
                return Err(Error::UnknownColumn(key.clone()));
            }
            serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| malformed(i + 1, e.to_string()))
        })
        .collect()
}

/// Parses either format, choosing JSON when the first non-blank byte is `[`.
pub fn parse_counter_source(bytes: &[u8]) -> Result<Vec<CounterRecord>> {
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'[') => parse_counters_json(bytes),
        _ => parse_counters(bytes),
    }
}

pub fn render_csv(records: &[CounterRecord]) -> String {
    let mut out = csv_header().join(",");
    out.push('\n');
    for r in records {
        out.push_str(&r.tbs_id);
        out.push(',');
        out.push_str(&r.window_start.format(TIMESTAMP_FORMAT).to_string());
        out.push(',');
        out.push_str(&r.window_len.to_string());
        for v in r.counters.to_array() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ClusterMember {
    pub tbs_id: String,
    pub tch_count: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Cluster {
    pub cluster_id: String,
    pub members: Vec<ClusterMember>,
}

impl Cluster {
    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::Config(format!("cluster {} has no members", self.cluster_id)));
        }
        let mut seen = HashSet::new();
        for m in &self.members {
            if m.tch_count == 0 {
                return Err(Error::Config(format!(
                    "cluster {}: {} has zero traffic channels",
                    self.cluster_id, m.tbs_id
                )));
            }
            if !seen.insert(m.tbs_id.as_str()) {
                return Err(Error::Config(format!(
                    "cluster {}: duplicate member {}",
                    self.cluster_id, m.tbs_id
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, tbs_id: &str) -> bool {
        self.members.iter().any(|m| m.tbs_id == tbs_id)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct ClusterConfig {
    pub clusters: Vec<Cluster>,
}

impl ClusterConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: ClusterConfig = serde_json::from_slice(bytes)?;
        for c in &cfg.clusters {
            c.validate()?;
        }
        Ok(cfg)
    }

    pub fn knows(&self, tbs_id: &str) -> bool {
        self.clusters.iter().any(|c| c.contains(tbs_id))
    }
}

/// Hour-indexed records keyed by `(tbs_id, hour start)`.
///
/// Sub-hour windows are folded into their clock hour on insert.
#[derive(Debug, Clone, Default)]
pub struct CounterStore {
    hours: BTreeMap<(String, NaiveDateTime), CounterRecord>,
    raw_windows: HashSet<(String, NaiveDateTime)>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CoverageGap {
    pub tbs_id: String,
    pub date: NaiveDate,
    pub hours_present: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StoreSummary {
    pub records: usize,
    pub tbs_count: usize,
    pub first_day: Option<NaiveDate>,
    pub last_day: Option<NaiveDate>,
    pub days: usize,
    pub coverage: f64,
    pub gaps: Vec<CoverageGap>,
}

impl CounterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = CounterRecord>) -> Result<Self> {
        let mut store = CounterStore::new();
        for r in records {
            store.insert(validate(r)?)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, record: ValidatedRecord) -> Result<()> {
        let record = record.into_inner();
        let dup = || Error::DuplicateWindow {
            tbs_id: record.tbs_id.clone(),
            window_start: record.window_start,
        };
        if !self.raw_windows.insert((record.tbs_id.clone(), record.window_start)) {
            return Err(dup());
        }
        let key = (record.tbs_id.clone(), record.hour_start());
        match self.hours.get_mut(&key) {
            None => {
                let mut r = record;
                r.window_start = key.1;
                self.hours.insert(key, r);
            }
            Some(existing) => {
                if existing.window_len + record.window_len > HOUR {
                    return Err(dup());
                }
                existing.window_len += record.window_len;
                existing.counters.accumulate(&record.counters);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &CounterRecord> {
        self.hours.values()
    }

    pub fn tbs_ids(&self) -> Vec<&str> {
        let ids: BTreeSet<&str> = self.hours.keys().map(|(t, _)| t.as_str()).collect();
        ids.into_iter().collect()
    }

    pub fn days(&self) -> Vec<NaiveDate> {
        let days: BTreeSet<NaiveDate> = self.hours.keys().map(|(_, ts)| ts.date()).collect();
        days.into_iter().collect()
    }

    pub fn days_of(&self, tbs_id: &str) -> Vec<NaiveDate> {
        let days: BTreeSet<NaiveDate> = self
            .hours
            .keys()
            .filter(|(t, _)| t == tbs_id)
            .map(|(_, ts)| ts.date())
            .collect();
        days.into_iter().collect()
    }

    /// Hourly records of one station for one calendar day, ascending.
    pub fn window_query(&self, tbs_id: &str, day: NaiveDate) -> Vec<&CounterRecord> {
        let start = day.and_time(NaiveTime::MIN);
        let end = start + Duration::days(1);
        self.hours
            .range((tbs_id.to_string(), start)..(tbs_id.to_string(), end))
            .map(|(_, r)| r)
            .collect()
    }

    /// All records of one station whose day lies in `[first, last]`.
    pub fn range_query(&self, tbs_id: &str, first: NaiveDate, last: NaiveDate) -> Vec<&CounterRecord> {
        let start = first.and_time(NaiveTime::MIN);
        let end = last.and_time(NaiveTime::MIN) + Duration::days(1);
        self.hours
            .range((tbs_id.to_string(), start)..(tbs_id.to_string(), end))
            .map(|(_, r)| r)
            .collect()
    }

    pub fn summary(&self) -> StoreSummary {
        let days = self.days();
        let tbs = self.tbs_ids();
        let mut gaps = Vec::new();
        let mut expected = 0usize;
        for t in &tbs {
            for d in &days {
                let present = self.window_query(t, *d).len();
                expected += 24;
                if present < 24 {
                    gaps.push(CoverageGap {
                        tbs_id: t.to_string(),
                        date: *d,
                        hours_present: present,
                    });
                }
            }
        }
        StoreSummary {
            records: self.len(),
            tbs_count: tbs.len(),
            first_day: days.first().copied(),
            last_day: days.last().copied(),
            days: days.len(),
            coverage: if expected == 0 { 0.0 } else { self.len() as f64 / expected as f64 },
            gaps,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let records: Vec<&CounterRecord> = self.records().collect();
        Ok(serde_json::to_string_pretty(&records)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Self::from_records(parse_counters_json(bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).unwrap()
    }

    fn full_hour(tbs: &str, start: &str) -> CounterRecord {
        let counters = CounterSet {
            service_time: 3600,
            ..Default::default()
        };
        CounterRecord::new(tbs, ts(start), counters)
    }

    #[test]
    fn zero_row_parses() {
        let mut csv = csv_header().join(",");
        csv.push_str("\nTBS1,2024-03-01T00:00:00,3600,3600");
        csv.push_str(&",0".repeat(CounterSet::COUNT - 1));
        csv.push('\n');
        let recs = parse_counters(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].counters, CounterSet { service_time: 3600, ..Default::default() });
    }

    #[test]
    fn header_only_is_empty() {
        let csv = csv_header().join(",") + "\n";
        assert!(parse_counters(csv.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn non_numeric_field_reports_line() {
        let mut csv = csv_header().join(",");
        csv.push_str("\nTBS1,2024-03-01T00:00:00,3600,3600,abc");
        csv.push_str(&",0".repeat(CounterSet::COUNT - 2));
        match parse_counters(csv.as_bytes()) {
            Err(Error::MalformedRow { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("gcbt"), "{reason}");
                assert!(reason.contains("non-numeric"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count() {
        let csv = csv_header().join(",") + "\nTBS1,2024-03-01T00:00:00,3600\n";
        assert!(matches!(parse_counters(csv.as_bytes()), Err(Error::MalformedRow { line: 2, .. })));
    }

    #[test]
    fn header_mismatch() {
        let csv = csv_header().join(",").replace("qwt", "qwait") + "\n";
        match parse_counters(csv.as_bytes()) {
            Err(Error::UnknownColumn(c)) => assert_eq!(c, "qwait"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_value_is_malformed() {
        let mut csv = csv_header().join(",");
        csv.push_str("\nTBS1,2024-03-01T00:00:00,3600,-1");
        csv.push_str(&",0".repeat(CounterSet::COUNT - 1));
        assert!(matches!(parse_counters(csv.as_bytes()), Err(Error::MalformedRow { .. })));
    }

    #[test]
    fn queued_exceeds_requests() {
        let mut r = full_hour("A", "2024-03-01T00:00:00");
        r.counters.qcrr = 5;
        r.counters.crr = 3;
        match validate(r) {
            Err(Error::InvariantViolation { field, detail }) => {
                assert_eq!(field, "qcrr");
                assert!(detail.contains("queued exceeds total requests"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn busy_equal_to_capacity_is_valid() {
        let mut r = full_hour("A", "2024-03-01T00:00:00");
        r.counters.pc = 7200;
        r.counters.gcbt = 3600;
        r.counters.icbt = 2400;
        r.counters.pmbt = 1200;
        assert!(validate(r.clone()).is_ok());
        r.counters.pmbt += 1;
        assert!(matches!(validate(r), Err(Error::InvariantViolation { field: "pc", .. })));
    }

    #[test]
    fn all_zero_is_valid() {
        let r = CounterRecord::new("A", ts("2024-03-01T05:00:00"), CounterSet::default());
        assert!(validate(r).is_ok());
    }

    #[test]
    fn validate_is_idempotent() {
        let r = full_hour("A", "2024-03-01T05:00:00");
        let once = validate(r).unwrap();
        let twice = validate(once.clone().into_inner()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn service_time_bounded_by_window() {
        let mut r = full_hour("A", "2024-03-01T05:00:00");
        r.counters.service_time = 3601;
        assert!(matches!(validate(r), Err(Error::InvariantViolation { field: "service_time", .. })));
    }

    #[test]
    fn pool_violations_name_failure_field() {
        let mut r = full_hour("A", "2024-03-01T05:00:00");
        r.counters.uum = 1;
        assert!(matches!(validate(r), Err(Error::InvariantViolation { field: "uum", .. })));
    }

    #[test]
    fn misaligned_full_hour_rejected() {
        let r = full_hour("A", "2024-03-01T05:30:00");
        assert!(matches!(validate(r), Err(Error::InvariantViolation { field: "window_start", .. })));
    }

    #[test]
    fn window_query_filters_and_orders() {
        let mut recs = Vec::new();
        for h in (0..24).rev() {
            recs.push(full_hour("A", &format!("2024-03-01T{h:02}:00:00")));
            recs.push(full_hour("B", &format!("2024-03-01T{h:02}:00:00")));
        }
        recs.push(full_hour("A", "2024-03-02T00:00:00"));
        let store = CounterStore::from_records(recs).unwrap();
        let day = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap();
        let got = store.window_query("A", day);
        assert_eq!(got.len(), 24);
        assert!(got.iter().all(|r| r.tbs_id == "A" && r.date() == day));
        assert!(got.windows(2).all(|w| w[0].window_start < w[1].window_start));
        assert!(store.window_query("A", NaiveDate::from_ymd_opt(2024, 3, 5).unwrap()).is_empty());
    }

    #[test]
    fn sub_hour_windows_fold_into_hour() {
        let mut a = CounterRecord::new("A", ts("2024-03-01T10:00:00"), CounterSet::default());
        a.window_len = 1800;
        a.counters.service_time = 1800;
        a.counters.crr = 4;
        a.counters.psqr = 3;
        let mut b = a.clone();
        b.window_start = ts("2024-03-01T10:30:00");
        b.counters.crr = 6;
        b.counters.psqr = 2;
        let store = CounterStore::from_records([a, b]).unwrap();
        let recs: Vec<_> = store.records().collect();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].window_len, 3600);
        assert_eq!(recs[0].counters.service_time, 3600);
        assert_eq!(recs[0].counters.crr, 10);
        assert_eq!(recs[0].counters.psqr, 3);
    }

    #[test]
    fn duplicate_window_rejected() {
        let r = full_hour("A", "2024-03-01T10:00:00");
        assert!(matches!(
            CounterStore::from_records([r.clone(), r]),
            Err(Error::DuplicateWindow { .. })
        ));
        let mut half = CounterRecord::new("A", ts("2024-03-01T10:30:00"), CounterSet::default());
        half.window_len = 1800;
        assert!(matches!(
            CounterStore::from_records([full_hour("A", "2024-03-01T10:00:00"), half]),
            Err(Error::DuplicateWindow { .. })
        ));
    }

    #[test]
    fn json_mirror_matches_csv() {
        let mut r = full_hour("A", "2024-03-01T10:00:00");
        r.counters.crr = 12;
        r.counters.qcrr = 2;
        let json = serde_json::to_string(&vec![r.clone()]).unwrap();
        assert_eq!(parse_counter_source(json.as_bytes()).unwrap(), vec![r.clone()]);
        let csv = render_csv(&[r.clone()]);
        assert_eq!(parse_counter_source(csv.as_bytes()).unwrap(), vec![r]);
    }

    #[test]
    fn json_unknown_key_rejected() {
        let json = r#"[{"tbs_id":"A","window_start":"2024-03-01T10:00:00","bogus":1}]"#;
        assert!(matches!(parse_counters_json(json.as_bytes()), Err(Error::UnknownColumn(k)) if k == "bogus"));
    }

    #[test]
    fn cluster_config_checks() {
        let ok = br#"{"clusters":[{"cluster_id":"C1","members":[{"tbs_id":"A","tch_count":3}]}]}"#;
        let cfg = ClusterConfig::from_json(ok).unwrap();
        assert!(cfg.knows("A") && !cfg.knows("B"));
        let zero = br#"{"clusters":[{"cluster_id":"C1","members":[{"tbs_id":"A","tch_count":0}]}]}"#;
        assert!(ClusterConfig::from_json(zero).is_err());
        let dup = br#"{"clusters":[{"cluster_id":"C1","members":[{"tbs_id":"A","tch_count":1},{"tbs_id":"A","tch_count":2}]}]}"#;
        assert!(ClusterConfig::from_json(dup).is_err());
        let empty = br#"{"clusters":[{"cluster_id":"C1","members":[]}]}"#;
        assert!(ClusterConfig::from_json(empty).is_err());
    }

    #[test]
    fn summary_reports_gaps() {
        let recs: Vec<_> = (0..20).map(|h| full_hour("A", &format!("2024-03-01T{h:02}:00:00"))).collect();
        let store = CounterStore::from_records(recs).unwrap();
        let s = store.summary();
        assert_eq!(s.records, 20);
        assert_eq!(s.tbs_count, 1);
        assert_eq!(s.gaps.len(), 1);
        assert_eq!(s.gaps[0].hours_present, 20);
    }
}
