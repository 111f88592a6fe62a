//! Key performance indicators computed from validated counter records.
//!
//! Percentages are evaluated exactly in integer arithmetic and truncated to a
//! 2^-40 grid. Shares with a common denominator therefore add up exactly, a
//! percentage never leaves `[0, 100]` when its counters are consistent, and
//! scaling numerator and denominator together never changes the result.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::counters::{Cluster, CounterRecord, HOUR};
use crate::error::{Error, Result};

pub const DEFAULT_RAC_THRESHOLD: u64 = 10;

const GRID_BITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Availability,
    Resource,
    Attachment,
    Handover,
    Voice,
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Percent,
    Seconds,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kpi {
    Availability,
    VoiceOccupBh,
    DataOccupBh,
    OccupBh,
    NetworkCapacityEfficiency,
    QueuingRateBh,
    MeanQueuingTimeBh,
    SimultQueuedRequestsPeakBh,
    MaxOccupMcchDl,
    MaxOccupMcchUl,
    RandomAccessCollisionsMcch,
    MsGroupAttachFailureRate,
    SwmiGroupAttachFailureRate,
    IndivCallHandoverFailureRate,
    GroupCallHandoverFailureRate,
    GroupCallSetupFailureRate,
    IndivCallSetupFailureRate,
    GroupCallProcessFailureRate,
    IndivCallProcessFailureRate,
    DwsAppSentFailureRate,
    MsSentFailureRate,
    PacketsFailureRate,
}

impl Kpi {
    pub const ALL: [Kpi; 22] = [
        Kpi::Availability,
        Kpi::VoiceOccupBh,
        Kpi::DataOccupBh,
        Kpi::OccupBh,
        Kpi::NetworkCapacityEfficiency,
        Kpi::QueuingRateBh,
        Kpi::MeanQueuingTimeBh,
        Kpi::SimultQueuedRequestsPeakBh,
        Kpi::MaxOccupMcchDl,
        Kpi::MaxOccupMcchUl,
        Kpi::RandomAccessCollisionsMcch,
        Kpi::MsGroupAttachFailureRate,
        Kpi::SwmiGroupAttachFailureRate,
        Kpi::IndivCallHandoverFailureRate,
        Kpi::GroupCallHandoverFailureRate,
        Kpi::GroupCallSetupFailureRate,
        Kpi::IndivCallSetupFailureRate,
        Kpi::GroupCallProcessFailureRate,
        Kpi::IndivCallProcessFailureRate,
        Kpi::DwsAppSentFailureRate,
        Kpi::MsSentFailureRate,
        Kpi::PacketsFailureRate,
    ];

    /// The failure-rate indicators evaluated per record and reduced to a
    /// daily worst case.
    pub const FAILURE_RATES: [Kpi; 11] = [
        Kpi::MsGroupAttachFailureRate,
        Kpi::SwmiGroupAttachFailureRate,
        Kpi::IndivCallHandoverFailureRate,
        Kpi::GroupCallHandoverFailureRate,
        Kpi::GroupCallSetupFailureRate,
        Kpi::IndivCallSetupFailureRate,
        Kpi::GroupCallProcessFailureRate,
        Kpi::IndivCallProcessFailureRate,
        Kpi::DwsAppSentFailureRate,
        Kpi::MsSentFailureRate,
        Kpi::PacketsFailureRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kpi::Availability => "availability",
            Kpi::VoiceOccupBh => "voice_occup_bh",
            Kpi::DataOccupBh => "data_occup_bh",
            Kpi::OccupBh => "occup_bh",
            Kpi::NetworkCapacityEfficiency => "network_capacity_efficiency",
            Kpi::QueuingRateBh => "queuing_rate_bh",
            Kpi::MeanQueuingTimeBh => "mean_queuing_time_bh",
            Kpi::SimultQueuedRequestsPeakBh => "simult_queued_requests_peak_bh",
            Kpi::MaxOccupMcchDl => "max_occup_mcch_dl",
            Kpi::MaxOccupMcchUl => "max_occup_mcch_ul",
            Kpi::RandomAccessCollisionsMcch => "random_access_collisions_mcch",
            Kpi::MsGroupAttachFailureRate => "ms_group_attach_failure_rate",
            Kpi::SwmiGroupAttachFailureRate => "swmi_group_attach_failure_rate",
            Kpi::IndivCallHandoverFailureRate => "indiv_call_handover_failure_rate",
            Kpi::GroupCallHandoverFailureRate => "group_call_handover_failure_rate",
            Kpi::GroupCallSetupFailureRate => "group_call_setup_failure_rate",
            Kpi::IndivCallSetupFailureRate => "indiv_call_setup_failure_rate",
            Kpi::GroupCallProcessFailureRate => "group_call_process_failure_rate",
            Kpi::IndivCallProcessFailureRate => "indiv_call_process_failure_rate",
            Kpi::DwsAppSentFailureRate => "dws_app_sent_failure_rate",
            Kpi::MsSentFailureRate => "ms_sent_failure_rate",
            Kpi::PacketsFailureRate => "packets_failure_rate",
        }
    }

    pub fn from_name(name: &str) -> Option<Kpi> {
        Kpi::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn unit(self) -> Unit {
        match self {
            Kpi::MeanQueuingTimeBh => Unit::Seconds,
            Kpi::SimultQueuedRequestsPeakBh | Kpi::RandomAccessCollisionsMcch => Unit::Count,
            _ => Unit::Percent,
        }
    }

    pub fn category(self) -> Category {
        use Kpi::*;
        match self {
            Availability => Category::Availability,
            VoiceOccupBh | DataOccupBh | OccupBh | NetworkCapacityEfficiency | QueuingRateBh
            | MeanQueuingTimeBh | SimultQueuedRequestsPeakBh | MaxOccupMcchDl | MaxOccupMcchUl
            | RandomAccessCollisionsMcch => Category::Resource,
            MsGroupAttachFailureRate | SwmiGroupAttachFailureRate => Category::Attachment,
            IndivCallHandoverFailureRate | GroupCallHandoverFailureRate => Category::Handover,
            GroupCallSetupFailureRate
            | IndivCallSetupFailureRate
            | GroupCallProcessFailureRate
            | IndivCallProcessFailureRate => Category::Voice,
            DwsAppSentFailureRate | MsSentFailureRate | PacketsFailureRate => Category::Data,
        }
    }

    pub fn is_failure_rate(self) -> bool {
        Kpi::FAILURE_RATES.contains(&self)
    }

    /// Only availability improves as it grows; every other indicator is read
    /// as "lower is better" when judged against a target.
    pub fn higher_is_better(self) -> bool {
        matches!(self, Kpi::Availability)
    }

    pub fn is_occupancy(self) -> bool {
        matches!(
            self,
            Kpi::VoiceOccupBh | Kpi::DataOccupBh | Kpi::OccupBh | Kpi::MaxOccupMcchDl | Kpi::MaxOccupMcchUl
        )
    }
}

impl std::fmt::Display for Kpi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Scope {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tbs: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cluster: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub date: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub period: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hour: Option<u32>,
}

impl Scope {
    pub fn tbs_day(tbs: &str, date: NaiveDate) -> Self {
        Scope {
            tbs: Some(tbs.to_string()),
            date: Some(date),
            ..Default::default()
        }
    }

    pub fn record(r: &CounterRecord) -> Self {
        Scope {
            tbs: Some(r.tbs_id.clone()),
            date: Some(r.date()),
            hour: Some(r.hour()),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiValue {
    pub name: Kpi,
    /// `None` when the denominator was zero.
    pub value: Option<f64>,
    pub unit: Unit,
    pub defined: bool,
    pub scope: Scope,
    pub category: Category,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bh_hour: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exceeds_threshold: Option<bool>,
}

impl KpiValue {
    pub fn new(name: Kpi, value: Option<f64>, scope: Scope) -> Self {
        KpiValue {
            name,
            value,
            unit: name.unit(),
            defined: value.is_some(),
            scope,
            category: name.category(),
            bh_hour: None,
            exceeds_threshold: None,
        }
    }

    fn at_bh(mut self, hour: u32) -> Self {
        self.bh_hour = Some(hour);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiBundle {
    pub category: Category,
    pub values: Vec<KpiValue>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bh_hour: Option<u32>,
    pub coverage: f64,
}

impl KpiBundle {
    pub fn get(&self, name: Kpi) -> Option<&KpiValue> {
        self.values.iter().find(|v| v.name == name)
    }

    pub fn value(&self, name: Kpi) -> Option<f64> {
        self.get(name).and_then(|v| v.value)
    }
}

/// `100 · num / den`, truncated to the 2^-40 grid; `None` on a zero
/// denominator.
pub fn percent(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        return None;
    }
    let scaled = (num as u128 * 100) << GRID_BITS;
    let q = scaled / den as u128;
    Some(q as f64 / (1u64 << GRID_BITS) as f64)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

/// The hour carrying the most traffic-channel busy time. Ties go to the
/// earliest hour.
pub fn busy_hour<'a>(day_records: &[&'a CounterRecord]) -> Result<(u32, &'a CounterRecord)> {
    let best = argmax_earliest(day_records, |r| r.counters.traffic())
        .ok_or_else(|| Error::NoData("no records for busy-hour detection".into()))?;
    Ok((best.hour(), best))
}

fn argmax_earliest<'a>(records: &[&'a CounterRecord], key: impl Fn(&CounterRecord) -> u64) -> Option<&'a CounterRecord> {
    let mut best: Option<&'a CounterRecord> = None;
    for r in records {
        best = match best {
            None => Some(r),
            Some(b) => {
                let (kr, kb) = (key(r), key(b));
                if kr > kb || (kr == kb && r.window_start < b.window_start) {
                    Some(r)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Share of `period_len` during which the station was in service.
pub fn availability(records: &[&CounterRecord], period_len: u64) -> Result<KpiValue> {
    if period_len == 0 {
        return Err(Error::Domain("availability period must be positive".into()));
    }
    let service: u64 = records.iter().map(|r| r.counters.service_time).sum();
    if service > period_len {
        return Err(Error::Domain(format!(
            "service time {service} exceeds period length {period_len}"
        )));
    }
    let mut scope = Scope::default();
    if let Some(first) = records.first() {
        scope.tbs = Some(first.tbs_id.clone());
        if records.iter().all(|r| r.date() == first.date()) {
            scope.date = Some(first.date());
        }
    }
    Ok(KpiValue::new(Kpi::Availability, percent(service, period_len), scope))
}

/// Resource indicators for one station-day. Occupancy and queuing figures
/// come from the busy hour; each MCCH occupancy comes from the hour where its
/// used-semislot counter peaks; collisions are the daily sum.
pub fn resource_kpis(day_records: &[&CounterRecord], rac_threshold: u64) -> Result<KpiBundle> {
    let (bh, rec) = busy_hour(day_records)?;
    let c = &rec.counters;
    let scope = Scope::tbs_day(&rec.tbs_id, rec.date());

    let voice = percent(c.gcbt + c.icbt, c.pc);
    let data = percent(c.pmbt, c.pc);
    let total = voice.zip(data).map(|(v, d)| v + d);

    let dl = argmax_earliest(day_records, |r| r.counters.dus).expect("non-empty");
    let ul = argmax_earliest(day_records, |r| r.counters.uus).expect("non-empty");
    let rac: u64 = day_records.iter().map(|r| r.counters.rac).sum();

    let hourly = |name, value| KpiValue::new(name, value, scope.clone()).at_bh(bh);
    let mut values = vec![
        hourly(Kpi::VoiceOccupBh, voice),
        hourly(Kpi::DataOccupBh, data),
        hourly(Kpi::OccupBh, total),
        hourly(Kpi::QueuingRateBh, percent(c.qcrr, c.crr)),
        hourly(Kpi::MeanQueuingTimeBh, ratio(c.qwt, c.qcrr)),
        hourly(Kpi::SimultQueuedRequestsPeakBh, Some(c.psqr as f64)),
    ];
    let mcch = |name, r: &CounterRecord, used, avail| {
        let mut v = KpiValue::new(name, percent(used, avail), scope.clone());
        v.scope.hour = Some(r.hour());
        v
    };
    values.push(mcch(Kpi::MaxOccupMcchDl, dl, dl.counters.dus, dl.counters.dss));
    values.push(mcch(Kpi::MaxOccupMcchUl, ul, ul.counters.uus, ul.counters.urs));
    let mut collisions = KpiValue::new(Kpi::RandomAccessCollisionsMcch, Some(rac as f64), scope.clone());
    collisions.exceeds_threshold = Some(rac > rac_threshold);
    values.push(collisions);

    let hours: std::collections::BTreeSet<u32> = day_records.iter().map(|r| r.hour()).collect();
    Ok(KpiBundle {
        category: Category::Resource,
        values,
        bh_hour: Some(bh),
        coverage: (hours.len() as f64 / 24.0).min(1.0),
    })
}

/// Capacity efficiency of a cluster: mean busy-hour traffic of every member
/// over the measurement period, relative to one hour of full capacity.
///
/// With `strict`, a record whose station is not a cluster member is an error;
/// otherwise such records are ignored.
pub fn cluster_efficiency(cluster: &Cluster, records: &[&CounterRecord], strict: bool) -> Result<KpiValue> {
    cluster.validate()?;
    let mut per_member: BTreeMap<&str, BTreeMap<NaiveDate, Vec<&CounterRecord>>> = BTreeMap::new();
    for r in records {
        if !cluster.contains(&r.tbs_id) {
            if strict {
                return Err(Error::Config(format!(
                    "station {} is not a member of cluster {}",
                    r.tbs_id, cluster.cluster_id
                )));
            }
            continue;
        }
        per_member.entry(&r.tbs_id).or_default().entry(r.date()).or_default().push(r);
    }

    let mut theoric = 0u64;
    let mut real = 0.0;
    for m in &cluster.members {
        theoric += m.tch_count as u64 * HOUR;
        let days = per_member.get(m.tbs_id.as_str()).ok_or_else(|| {
            Error::NoData(format!("cluster {}: no records for {}", cluster.cluster_id, m.tbs_id))
        })?;
        let mut sum = 0u64;
        for day in days.values() {
            let (_, bh) = busy_hour(day)?;
            sum += bh.counters.traffic();
        }
        real += sum as f64 / days.len() as f64;
    }
    let scope = Scope {
        cluster: Some(cluster.cluster_id.clone()),
        ..Default::default()
    };
    Ok(KpiValue::new(
        Kpi::NetworkCapacityEfficiency,
        Some(100.0 * real / theoric as f64),
        scope,
    ))
}

fn record_bundle(record: &CounterRecord, category: Category, items: &[(Kpi, u64, u64)]) -> KpiBundle {
    let scope = Scope::record(record);
    KpiBundle {
        category,
        values: items
            .iter()
            .map(|&(name, num, den)| KpiValue::new(name, percent(num, den), scope.clone()))
            .collect(),
        bh_hour: None,
        coverage: (record.window_len as f64 / HOUR as f64).min(1.0),
    }
}

pub fn attachment_kpis(record: &CounterRecord) -> KpiBundle {
    let c = &record.counters;
    record_bundle(
        record,
        Category::Attachment,
        &[
            (Kpi::MsGroupAttachFailureRate, c.ugau, c.gau),
            (Kpi::SwmiGroupAttachFailureRate, c.ugas, c.gas),
        ],
    )
}

pub fn handover_kpis(record: &CounterRecord) -> KpiBundle {
    let c = &record.counters;
    record_bundle(
        record,
        Category::Handover,
        &[
            (Kpi::IndivCallHandoverFailureRate, c.uich, c.ich),
            (Kpi::GroupCallHandoverFailureRate, c.ugch, c.gch),
        ],
    )
}

/// Setup and processing failure rates, each pooled over successes plus
/// failures.
pub fn voice_kpis(record: &CounterRecord) -> KpiBundle {
    let c = &record.counters;
    record_bundle(
        record,
        Category::Voice,
        &[
            (Kpi::GroupCallSetupFailureRate, c.upgc, c.spgc + c.upgc),
            (Kpi::IndivCallSetupFailureRate, c.upic, c.spic + c.upic),
            (Kpi::GroupCallProcessFailureRate, c.uegc, c.segc + c.uegc),
            (Kpi::IndivCallProcessFailureRate, c.ueic, c.seic + c.ueic),
        ],
    )
}

pub fn data_kpis(record: &CounterRecord) -> KpiBundle {
    let c = &record.counters;
    record_bundle(
        record,
        Category::Data,
        &[
            (Kpi::DwsAppSentFailureRate, c.udam, c.dam),
            (Kpi::MsSentFailureRate, c.uum, c.um),
            (Kpi::PacketsFailureRate, c.crp, c.srp + c.crp),
        ],
    )
}

/// All eleven failure-rate indicators of one record.
pub fn failure_kpis(record: &CounterRecord) -> Vec<KpiValue> {
    [attachment_kpis(record), handover_kpis(record), voice_kpis(record), data_kpis(record)]
        .into_iter()
        .flat_map(|b| b.values)
        .collect()
}

/// The highest defined value of a series, carrying its scope. Ties go to the
/// earliest hour, then the lexicographically smallest station id.
pub fn daily_worst_case(series: &[KpiValue]) -> Result<KpiValue> {
    series
        .iter()
        .filter_map(|v| v.value.map(|x| (x, v)))
        .min_by(|(xa, a), (xb, b)| {
            xb.partial_cmp(xa)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.scope.date.cmp(&b.scope.date))
                .then_with(|| a.scope.hour.cmp(&b.scope.hour))
                .then_with(|| a.scope.tbs.cmp(&b.scope.tbs))
        })
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::NoData("every value in the series is undefined".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counters::{ClusterMember, CounterSet};

    fn rec(tbs: &str, day: u32, hour: u32, c: CounterSet) -> CounterRecord {
        let ts = NaiveDate::from_ymd_opt(2024, 5, day).unwrap().and_hms_opt(hour, 0, 0).unwrap();
        CounterRecord::new(tbs, ts, c)
    }

    fn traffic(g: u64) -> CounterSet {
        CounterSet {
            gcbt: g,
            pc: 1_000_000,
            service_time: 3600,
            ..Default::default()
        }
    }

    #[test]
    fn percent_grid_is_exact_for_dyadic_ratios() {
        assert_eq!(percent(1800 + 900, 7200), Some(37.5));
        assert_eq!(percent(0, 5), Some(0.0));
        assert_eq!(percent(5, 5), Some(100.0));
        assert_eq!(percent(1, 0), None);
        assert!((percent(300, 7200).unwrap() - 100.0 / 24.0).abs() < 1e-11);
    }

    #[test]
    fn busy_hour_examples() {
        let zero: Vec<_> = (0..24).map(|h| rec("A", 1, h, traffic(0))).collect();
        let refs: Vec<_> = zero.iter().collect();
        assert_eq!(busy_hour(&refs).unwrap().0, 0);

        let four: Vec<_> = [10, 50, 50, 20].iter().enumerate().map(|(h, &g)| rec("A", 1, h as u32, traffic(g))).collect();
        let refs: Vec<_> = four.iter().collect();
        assert_eq!(busy_hour(&refs).unwrap().0, 1);

        let one = [rec("A", 1, 9, traffic(3))];
        assert_eq!(busy_hour(&[&one[0]]).unwrap().0, 9);
        assert!(matches!(busy_hour(&[]), Err(Error::NoData(_))));
    }

    #[test]
    fn availability_examples() {
        let full: Vec<_> = (0..24).map(|h| rec("A", 1, h, traffic(0))).collect();
        let refs: Vec<_> = full.iter().collect();
        assert_eq!(availability(&refs, 86_400).unwrap().value, Some(100.0));

        let down: Vec<_> = (0..24).map(|h| rec("A", 1, h, CounterSet::default())).collect();
        let refs: Vec<_> = down.iter().collect();
        assert_eq!(availability(&refs, 86_400).unwrap().value, Some(0.0));

        let mut partial = full.clone();
        partial[23].counters.service_time = 0;
        let refs: Vec<_> = partial.iter().collect();
        let v = availability(&refs, 86_400).unwrap().value.unwrap();
        assert!((v - 82_800.0 / 86_400.0 * 100.0).abs() < 1e-9);

        assert!(availability(&refs, 0).is_err());
        assert!(availability(&refs, 3600).is_err());
    }

    #[test]
    fn resource_bh_example() {
        let mut recs: Vec<_> = (0..24).map(|h| rec("A", 1, h, CounterSet { pc: 7200, service_time: 3600, ..Default::default() })).collect();
        recs[14].counters = CounterSet {
            gcbt: 1800,
            icbt: 900,
            pmbt: 300,
            pc: 7200,
            crr: 120,
            qcrr: 0,
            service_time: 3600,
            ..Default::default()
        };
        let refs: Vec<_> = recs.iter().collect();
        let b = resource_kpis(&refs, DEFAULT_RAC_THRESHOLD).unwrap();
        assert_eq!(b.bh_hour, Some(14));
        assert_eq!(b.value(Kpi::VoiceOccupBh), Some(37.5));
        assert!((b.value(Kpi::DataOccupBh).unwrap() - 4.166_666_666_666).abs() < 1e-9);
        assert!((b.value(Kpi::OccupBh).unwrap() - 41.666_666_666_666).abs() < 1e-9);
        assert_eq!(b.value(Kpi::QueuingRateBh), Some(0.0));
        assert!(!b.get(Kpi::MeanQueuingTimeBh).unwrap().defined);
        assert_eq!(b.coverage, 1.0);
    }

    #[test]
    fn mcch_uses_its_own_peak_hour() {
        let mut recs: Vec<_> = (0..3).map(|h| rec("A", 1, h, traffic(10))).collect();
        recs[0].counters.gcbt = 500;
        recs[2].counters.dss = 40;
        recs[2].counters.dus = 40;
        recs[1].counters.urs = 100;
        recs[1].counters.uus = 25;
        recs[1].counters.rac = 6;
        recs[2].counters.rac = 6;
        let refs: Vec<_> = recs.iter().collect();
        let b = resource_kpis(&refs, 10).unwrap();
        assert_eq!(b.bh_hour, Some(0));
        let dl = b.get(Kpi::MaxOccupMcchDl).unwrap();
        assert_eq!(dl.value, Some(100.0));
        assert_eq!(dl.scope.hour, Some(2));
        assert_eq!(b.value(Kpi::MaxOccupMcchUl), Some(25.0));
        let rac = b.get(Kpi::RandomAccessCollisionsMcch).unwrap();
        assert_eq!(rac.value, Some(12.0));
        assert_eq!(rac.exceeds_threshold, Some(true));
    }

    fn cluster(members: &[(&str, u32)]) -> Cluster {
        Cluster {
            cluster_id: "C".into(),
            members: members
                .iter()
                .map(|&(t, n)| ClusterMember {
                    tbs_id: t.into(),
                    tch_count: n,
                })
                .collect(),
        }
    }

    fn bh_day(tbs: &str, day: u32, traffic_cs: u64, tch: u64) -> Vec<CounterRecord> {
        (0..24)
            .map(|h| {
                let g = if h == 11 { traffic_cs } else { 0 };
                rec(tbs, day, h, CounterSet { gcbt: g, pc: tch * 3600, service_time: 3600, ..Default::default() })
            })
            .collect()
    }

    #[test]
    fn cluster_efficiency_examples() {
        let recs: Vec<_> = (1..=3).flat_map(|d| bh_day("A", d, 3600, 1)).collect();
        let refs: Vec<_> = recs.iter().collect();
        assert_eq!(cluster_efficiency(&cluster(&[("A", 1)]), &refs, true).unwrap().value, Some(100.0));

        let recs: Vec<_> = [bh_day("A", 1, 1000, 2), bh_day("A", 2, 2600, 2)].concat();
        let refs: Vec<_> = recs.iter().collect();
        assert_eq!(cluster_efficiency(&cluster(&[("A", 2)]), &refs, true).unwrap().value, Some(25.0));

        let recs: Vec<_> = [bh_day("A", 1, 7200, 2), bh_day("B", 1, 0, 2)].concat();
        let refs: Vec<_> = recs.iter().collect();
        assert_eq!(
            cluster_efficiency(&cluster(&[("A", 2), ("B", 2)]), &refs, true).unwrap().value,
            Some(50.0)
        );
    }

    #[test]
    fn cluster_efficiency_errors() {
        let recs = bh_day("A", 1, 100, 1);
        let refs: Vec<_> = recs.iter().collect();
        assert!(matches!(
            cluster_efficiency(&cluster(&[("A", 1), ("B", 1)]), &refs, false),
            Err(Error::NoData(_))
        ));
        let mut with_stranger = recs.clone();
        with_stranger.extend(bh_day("Z", 1, 100, 1));
        let refs: Vec<_> = with_stranger.iter().collect();
        assert!(matches!(cluster_efficiency(&cluster(&[("A", 1)]), &refs, true), Err(Error::Config(_))));
        assert!(cluster_efficiency(&cluster(&[("A", 1)]), &refs, false).is_ok());
    }

    fn one(c: CounterSet) -> CounterRecord {
        rec("A", 1, 0, c)
    }

    #[test]
    fn attachment_examples() {
        let b = attachment_kpis(&one(CounterSet { gau: 50, ..Default::default() }));
        assert_eq!(b.value(Kpi::MsGroupAttachFailureRate), Some(0.0));
        let b = attachment_kpis(&one(CounterSet { ugas: 7, gas: 7, ..Default::default() }));
        assert_eq!(b.value(Kpi::SwmiGroupAttachFailureRate), Some(100.0));
        let b = attachment_kpis(&one(CounterSet { ugau: 3, gau: 40, ..Default::default() }));
        assert_eq!(b.value(Kpi::MsGroupAttachFailureRate), Some(7.5));
    }

    #[test]
    fn handover_examples() {
        let b = handover_kpis(&one(CounterSet { ich: 200, ..Default::default() }));
        assert_eq!(b.value(Kpi::IndivCallHandoverFailureRate), Some(0.0));
        let b = handover_kpis(&one(CounterSet { ugch: 1, gch: 1, ..Default::default() }));
        assert_eq!(b.value(Kpi::GroupCallHandoverFailureRate), Some(100.0));
        let b = handover_kpis(&one(CounterSet { uich: 9, ich: 120, ..Default::default() }));
        assert_eq!(b.value(Kpi::IndivCallHandoverFailureRate), Some(7.5));
    }

    #[test]
    fn voice_examples() {
        let b = voice_kpis(&one(CounterSet { spgc: 500, ..Default::default() }));
        assert_eq!(b.value(Kpi::GroupCallSetupFailureRate), Some(0.0));
        let b = voice_kpis(&one(CounterSet { uegc: 25, segc: 75, ..Default::default() }));
        assert_eq!(b.value(Kpi::GroupCallProcessFailureRate), Some(25.0));
        assert!(!b.get(Kpi::IndivCallSetupFailureRate).unwrap().defined);
    }

    #[test]
    fn data_examples() {
        let b = data_kpis(&one(CounterSet { dam: 1000, ..Default::default() }));
        assert_eq!(b.value(Kpi::DwsAppSentFailureRate), Some(0.0));
        let b = data_kpis(&one(CounterSet { crp: 1, srp: 3, ..Default::default() }));
        assert_eq!(b.value(Kpi::PacketsFailureRate), Some(25.0));
        assert!(!b.get(Kpi::MsSentFailureRate).unwrap().defined);
    }

    fn failure(tbs: &str, hour: u32, v: Option<f64>) -> KpiValue {
        let scope = Scope {
            tbs: Some(tbs.into()),
            hour: Some(hour),
            ..Default::default()
        };
        KpiValue::new(Kpi::PacketsFailureRate, v, scope)
    }

    #[test]
    fn worst_case_examples() {
        let s = vec![failure("A", 0, Some(2.0)), failure("A", 1, Some(5.0)), failure("A", 2, Some(3.0))];
        let w = daily_worst_case(&s).unwrap();
        assert_eq!((w.value, w.scope.hour), (Some(5.0), Some(1)));

        let s = vec![failure("B", 3, Some(1.0)), failure("C", 2, Some(1.0)), failure("A", 2, Some(1.0))];
        let w = daily_worst_case(&s).unwrap();
        assert_eq!((w.scope.tbs.as_deref(), w.scope.hour), (Some("A"), Some(2)));

        let s = vec![failure("A", 0, None), failure("B", 0, None)];
        assert!(matches!(daily_worst_case(&s), Err(Error::NoData(_))));

        let s = vec![failure("A", 0, None), failure("B", 5, Some(0.0))];
        assert_eq!(daily_worst_case(&s).unwrap().scope.tbs.as_deref(), Some("B"));
    }

    #[test]
    fn kpi_json_shape() {
        let v = KpiValue::new(Kpi::VoiceOccupBh, Some(37.5), Scope::tbs_day("A", NaiveDate::from_ymd_opt(2024, 5, 1).unwrap())).at_bh(14);
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["name"], "voice_occup_bh");
        assert_eq!(json["unit"], "percent");
        assert_eq!(json["category"], "resource");
        assert_eq!(json["scope"]["tbs"], "A");
        assert_eq!(json["scope"]["date"], "2024-05-01");
        assert_eq!(json["bh_hour"], 14);
        let undefined = KpiValue::new(Kpi::MsSentFailureRate, None, Scope::default());
        let json = serde_json::to_value(&undefined).unwrap();
        assert!(json["value"].is_null());
        assert_eq!(json["defined"], false);
        assert!(json.get("bh_hour").is_none());
    }

    #[test]
    fn names_round_trip() {
        for k in Kpi::ALL {
            assert_eq!(Kpi::from_name(k.name()), Some(k));
            assert_eq!(serde_json::to_value(k).unwrap(), k.name());
        }
    }
}
