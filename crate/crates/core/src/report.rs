//! Periodic QoS reports assembled from the KPI engine.
//!
//! Weeks are ISO weeks and months are calendar months. Roll-ups over a
//! period take the worst daily worst case for failure rates and the mean of
//! daily values for availability and occupancy.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::counters::{ClusterConfig, CounterRecord, CounterStore};
use crate::error::{Error, Result};
use crate::kpi::{
    availability, cluster_efficiency, daily_worst_case, failure_kpis, resource_kpis, Category, Kpi, KpiBundle,
    KpiValue, Scope, DEFAULT_RAC_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodKind {
    #[default]
    Daily,
    Weekly,
    Monthly,
}

impl PeriodKind {
    pub fn key(self, day: NaiveDate) -> String {
        match self {
            PeriodKind::Daily => day.format("%Y-%m-%d").to_string(),
            PeriodKind::Weekly => {
                let w = day.iso_week();
                format!("{}-W{:02}", w.year(), w.week())
            }
            PeriodKind::Monthly => day.format("%Y-%m").to_string(),
        }
    }

    /// First and last calendar day of the period containing `day`.
    pub fn bounds(self, day: NaiveDate) -> (NaiveDate, NaiveDate) {
        match self {
            PeriodKind::Daily => (day, day),
            PeriodKind::Weekly => {
                let first = day - Duration::days(day.weekday().num_days_from_monday() as i64);
                (first, first + Duration::days(6))
            }
            PeriodKind::Monthly => {
                let first = day.with_day(1).expect("day 1 exists");
                let next = if first.month() == 12 {
                    NaiveDate::from_ymd_opt(first.year() + 1, 1, 1)
                } else {
                    NaiveDate::from_ymd_opt(first.year(), first.month() + 1, 1)
                }
                .expect("valid month");
                (first, next - Duration::days(1))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Markdown,
    Json,
    Csv,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Markdown => "md",
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

/// A target for one KPI. A bare number is a floor for availability and a
/// ceiling for everything else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Bare(f64),
    Bounds {
        #[serde(default)]
        min: Option<f64>,
        #[serde(default)]
        max: Option<f64>,
    },
}

impl Threshold {
    fn bounds(self, kpi: Kpi) -> (Option<f64>, Option<f64>) {
        match self {
            Threshold::Bare(x) if kpi.higher_is_better() => (Some(x), None),
            Threshold::Bare(x) => (None, Some(x)),
            Threshold::Bounds { min, max } => (min, max),
        }
    }
}

pub type Thresholds = BTreeMap<Kpi, Threshold>;

pub fn parse_thresholds(bytes: &[u8]) -> Result<Thresholds> {
    let raw: BTreeMap<String, Threshold> = serde_json::from_slice(bytes)?;
    raw.into_iter()
        .map(|(k, t)| {
            Kpi::from_name(&k)
                .map(|kpi| (kpi, t))
                .ok_or_else(|| Error::Config(format!("unknown KPI `{k}` in thresholds")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub period: PeriodKind,
    pub thresholds: Option<Thresholds>,
    pub clusters: ClusterConfig,
    pub formats: Vec<OutputFormat>,
    pub rac_threshold: u64,
    pub strict: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            period: PeriodKind::Daily,
            thresholds: None,
            clusters: ClusterConfig::default(),
            formats: vec![OutputFormat::Markdown, OutputFormat::Json],
            rac_threshold: DEFAULT_RAC_THRESHOLD,
            strict: false,
        }
    }
}

impl ReportConfig {
    pub fn validate(&self) -> Result<()> {
        if self.formats.is_empty() {
            return Err(Error::Config("at least one output format is required".into()));
        }
        for c in &self.clusters.clusters {
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: Kpi,
    pub scope: Scope,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    pub pass: bool,
}

pub fn verdict(value: &KpiValue, thresholds: &Thresholds) -> Option<Verdict> {
    let x = value.value?;
    let (min, max) = thresholds.get(&value.name)?.bounds(value.name);
    let pass = min.is_none_or(|m| x >= m) && max.is_none_or(|m| x <= m);
    Some(Verdict {
        name: value.name,
        scope: value.scope.clone(),
        value: x,
        min,
        max,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub period: String,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    /// Hourly windows present over windows expected for every station.
    pub coverage: f64,
    /// Per station: mean of its daily availabilities.
    pub availability: Vec<KpiValue>,
    /// Per station and day.
    pub resource: Vec<KpiBundle>,
    /// Per station: mean of its daily occupancy figures.
    pub occupancy: Vec<KpiValue>,
    pub cluster_efficiency: Vec<KpiValue>,
    /// Per day and failure KPI, the worst station-hour.
    pub daily_worst_cases: Vec<KpiValue>,
    /// Per failure KPI, the worst daily worst case.
    pub worst_cases: Vec<KpiValue>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verdicts: Option<Vec<Verdict>>,
}

impl PeriodReport {
    /// Every indicator value in report order, tagged with its section.
    pub fn sections(&self) -> Vec<(&'static str, &KpiValue)> {
        let mut out = Vec::new();
        out.extend(self.availability.iter().map(|v| ("availability", v)));
        out.extend(self.resource.iter().flat_map(|b| b.values.iter()).map(|v| ("resource_bh", v)));
        out.extend(self.occupancy.iter().map(|v| ("occupancy_mean", v)));
        out.extend(self.cluster_efficiency.iter().map(|v| ("cluster_efficiency", v)));
        out.extend(self.daily_worst_cases.iter().map(|v| ("daily_worst_case", v)));
        out.extend(self.worst_cases.iter().map(|v| ("period_worst_case", v)));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub period_kind: PeriodKind,
    pub periods: Vec<PeriodReport>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn period_scope(tbs: Option<&str>, period: &str) -> Scope {
    Scope {
        tbs: tbs.map(str::to_string),
        period: Some(period.to_string()),
        ..Default::default()
    }
}

pub fn daily_availability(day_records: &[&CounterRecord]) -> Result<KpiValue> {
    let period_len: u64 = day_records.iter().map(|r| r.window_len).sum();
    availability(day_records, period_len)
}

/// Worst case of one failure KPI across every station-hour of one day; an
/// undefined value when no station had any attempt.
pub fn day_worst_case(store: &CounterStore, day: NaiveDate, kpi: Kpi) -> KpiValue {
    let series: Vec<KpiValue> = store
        .tbs_ids()
        .into_iter()
        .flat_map(|t| store.window_query(t, day))
        .flat_map(failure_kpis)
        .filter(|v| v.name == kpi)
        .collect();
    daily_worst_case(&series).unwrap_or_else(|_| {
        KpiValue::new(
            kpi,
            None,
            Scope {
                date: Some(day),
                ..Default::default()
            },
        )
    })
}

pub fn build_report(store: &CounterStore, config: &ReportConfig) -> Result<Report> {
    config.validate()?;
    if store.is_empty() {
        return Err(Error::NoData("counter store is empty".into()));
    }
    let tbs_ids = store.tbs_ids();
    if config.strict && !config.clusters.clusters.is_empty() {
        if let Some(t) = tbs_ids.iter().find(|t| !config.clusters.knows(t)) {
            return Err(Error::Config(format!("station {t} is not in the cluster configuration")));
        }
    }

    let mut periods: BTreeMap<String, Vec<NaiveDate>> = BTreeMap::new();
    for d in store.days() {
        periods.entry(config.period.key(d)).or_default().push(d);
    }

    let mut out = Vec::new();
    for (key, days) in periods {
        let (first, last) = config.period.bounds(days[0]);
        let calendar_days = (last - first).num_days() as usize + 1;

        let mut availability_rows = Vec::new();
        let mut resource = Vec::new();
        let mut occupancy = Vec::new();
        let mut present = 0usize;
        for t in &tbs_ids {
            let mut daily_avail = Vec::new();
            let mut daily_occ: BTreeMap<Kpi, Vec<f64>> = BTreeMap::new();
            for d in &days {
                let recs = store.window_query(t, *d);
                if recs.is_empty() {
                    continue;
                }
                present += recs.len();
                if let Some(v) = daily_availability(&recs)?.value {
                    daily_avail.push(v);
                }
                let bundle = resource_kpis(&recs, config.rac_threshold)?;
                for v in bundle.values.iter().filter(|v| v.name.is_occupancy()) {
                    if let Some(x) = v.value {
                        daily_occ.entry(v.name).or_default().push(x);
                    }
                }
                resource.push(bundle);
            }
            let scope = period_scope(Some(t), &key);
            availability_rows.push(KpiValue::new(Kpi::Availability, mean(&daily_avail), scope.clone()));
            for kpi in [Kpi::VoiceOccupBh, Kpi::DataOccupBh, Kpi::OccupBh, Kpi::MaxOccupMcchDl, Kpi::MaxOccupMcchUl] {
                let xs = daily_occ.remove(&kpi).unwrap_or_default();
                occupancy.push(KpiValue::new(kpi, mean(&xs), scope.clone()));
            }
        }

        let mut efficiencies = Vec::new();
        for cluster in &config.clusters.clusters {
            let recs: Vec<&CounterRecord> = cluster
                .members
                .iter()
                .flat_map(|m| store.range_query(&m.tbs_id, first, last))
                .collect();
            let scope = Scope {
                cluster: Some(cluster.cluster_id.clone()),
                period: Some(key.clone()),
                ..Default::default()
            };
            let value = match cluster_efficiency(cluster, &recs, false) {
                Ok(v) => v.value,
                Err(Error::NoData(_)) => None,
                Err(e) => return Err(e),
            };
            efficiencies.push(KpiValue::new(Kpi::NetworkCapacityEfficiency, value, scope));
        }

        let mut daily_worst = Vec::new();
        let mut worst = Vec::new();
        for kpi in Kpi::FAILURE_RATES {
            let per_day: Vec<KpiValue> = days.iter().map(|d| day_worst_case(store, *d, kpi)).collect();
            let w = daily_worst_case(&per_day).unwrap_or_else(|_| KpiValue::new(kpi, None, period_scope(None, &key)));
            let mut w = w;
            w.scope.period = Some(key.clone());
            worst.push(w);
            daily_worst.extend(per_day);
        }

        let mut report = PeriodReport {
            period: key,
            first_day: first,
            last_day: last,
            coverage: present as f64 / (tbs_ids.len() * calendar_days * 24) as f64,
            availability: availability_rows,
            resource,
            occupancy,
            cluster_efficiency: efficiencies,
            daily_worst_cases: daily_worst,
            worst_cases: worst,
            verdicts: None,
        };
        if let Some(th) = &config.thresholds {
            report.verdicts = Some(report.sections().into_iter().filter_map(|(_, v)| verdict(v, th)).collect());
        }
        out.push(report);
    }
    Ok(Report {
        period_kind: config.period,
        periods: out,
    })
}

/// Selection for the `kpi` listing; `None` means "all".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KpiFilter {
    pub tbs: Option<String>,
    pub date: Option<NaiveDate>,
    pub category: Option<Category>,
}

/// Daily availability, busy-hour resource indicators and hourly failure rates
/// for every selected station-day.
pub fn kpi_listing(store: &CounterStore, filter: &KpiFilter, rac_threshold: u64) -> Result<Vec<KpiValue>> {
    let mut out = Vec::new();
    for t in store.tbs_ids() {
        if filter.tbs.as_deref().is_some_and(|f| f != t) {
            continue;
        }
        for d in store.days_of(t) {
            if filter.date.is_some_and(|f| f != d) {
                continue;
            }
            let recs = store.window_query(t, d);
            out.push(daily_availability(&recs)?);
            out.extend(resource_kpis(&recs, rac_threshold)?.values);
            out.extend(recs.iter().flat_map(|r| failure_kpis(r)));
        }
    }
    if let Some(c) = filter.category {
        out.retain(|v| v.category == c);
    }
    if out.is_empty() {
        return Err(Error::NoData("no records match the selection".into()));
    }
    Ok(out)
}

pub fn fmt3(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"))
}

fn scope_cells(s: &Scope) -> [String; 4] {
    let opt = |o: Option<String>| o.unwrap_or_default();
    [
        opt(s.tbs.clone().or_else(|| s.cluster.clone())),
        opt(s.date.map(|d| d.to_string()).or_else(|| s.period.clone())),
        opt(s.hour.map(|h| h.to_string())),
        String::new(),
    ]
}

fn unit_label(v: &KpiValue) -> &'static str {
    match v.unit {
        crate::kpi::Unit::Percent => "%",
        crate::kpi::Unit::Seconds => "s",
        crate::kpi::Unit::Count => "count",
    }
}

fn verdict_cell(v: &KpiValue, th: &Thresholds) -> &'static str {
    match verdict(v, th) {
        Some(x) if x.pass => "PASS",
        Some(_) => "FAIL",
        None => "",
    }
}

pub fn render_markdown(report: &Report, thresholds: Option<&Thresholds>) -> String {
    let kind = match report.period_kind {
        PeriodKind::Daily => "Daily",
        PeriodKind::Weekly => "Weekly",
        PeriodKind::Monthly => "Monthly",
    };
    let mut out = format!("# {kind} QoS report\n");
    for p in &report.periods {
        let _ = write!(
            out,
            "\n## {} ({} to {})\n\nCoverage: {:.3}%\n",
            p.period,
            p.first_day,
            p.last_day,
            p.coverage * 100.0
        );
        let mut current = "";
        for (section, v) in p.sections() {
            if section != current {
                current = section;
                let _ = write!(out, "\n### {section}\n\n| KPI | scope | date/period | hour | BH | value | unit |");
                if thresholds.is_some() {
                    out.push_str(" verdict |");
                }
                out.push_str("\n|---|---|---|---:|---:|---:|---|");
                if thresholds.is_some() {
                    out.push_str("---|");
                }
                out.push('\n');
            }
            let [who, when, hour, _] = scope_cells(&v.scope);
            let bh = v.bh_hour.map(|h| h.to_string()).unwrap_or_default();
            let mut value = fmt3(v.value);
            if v.exceeds_threshold == Some(true) {
                value.push_str(" (above threshold)");
            }
            let _ = write!(out, "| {} | {who} | {when} | {hour} | {bh} | {value} | {} |", v.name, unit_label(v));
            if let Some(th) = thresholds {
                let _ = write!(out, " {} |", verdict_cell(v, th));
            }
            out.push('\n');
        }
    }
    out
}

pub fn render_json(report: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn render_csv_report(report: &Report, thresholds: Option<&Thresholds>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "period", "section", "kpi", "category", "tbs", "cluster", "date", "hour", "bh_hour", "value", "unit", "defined",
    ];
    if thresholds.is_some() {
        header.push("verdict");
    }
    w.write_record(&header).map_err(csv_err)?;
    for p in &report.periods {
        for (section, v) in p.sections() {
            let s = &v.scope;
            let mut row = vec![
                p.period.clone(),
                section.to_string(),
                v.name.to_string(),
                serde_json::to_value(v.category)?.as_str().unwrap_or_default().to_string(),
                s.tbs.clone().unwrap_or_default(),
                s.cluster.clone().unwrap_or_default(),
                s.date.map(|d| d.to_string()).unwrap_or_default(),
                s.hour.map(|h| h.to_string()).unwrap_or_default(),
                v.bh_hour.map(|h| h.to_string()).unwrap_or_default(),
                v.value.map(|x| x.to_string()).unwrap_or_default(),
                serde_json::to_value(v.unit)?.as_str().unwrap_or_default().to_string(),
                v.defined.to_string(),
            ];
            if let Some(th) = thresholds {
                row.push(verdict_cell(v, th).to_string());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Flat CSV of a KPI listing, one value per row.
pub fn render_kpi_csv(values: &[KpiValue]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kpi", "category", "tbs", "date", "hour", "bh_hour", "value", "unit", "defined", "exceeds_threshold"])
        .map_err(csv_err)?;
    for v in values {
        let s = &v.scope;
        w.write_record([
            v.name.to_string(),
            serde_json::to_value(v.category)?.as_str().unwrap_or_default().to_string(),
            s.tbs.clone().unwrap_or_default(),
            s.date.map(|d| d.to_string()).unwrap_or_default(),
            s.hour.map(|h| h.to_string()).unwrap_or_default(),
            v.bh_hour.map(|h| h.to_string()).unwrap_or_default(),
            v.value.map(|x| x.to_string()).unwrap_or_default(),
            serde_json::to_value(v.unit)?.as_str().unwrap_or_default().to_string(),
            v.defined.to_string(),
            v.exceeds_threshold.map(|b| b.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn render(report: &Report, format: OutputFormat, thresholds: Option<&Thresholds>) -> Result<String> {
    match format {
        OutputFormat::Markdown => Ok(render_markdown(report, thresholds)),
        OutputFormat::Json => render_json(report),
        OutputFormat::Csv => render_csv_report(report, thresholds),
    }
}
