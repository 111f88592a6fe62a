//! Required / planned / achieved / perceived QoS perspectives.
//!
//! Organisation-level requirement or perception matrices (N organisations by
//! L criteria) are mapped into an M-dimensional KPI space by a configured
//! mapping, and the four resulting vectors are compared for convergence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kpi::{Kpi, KpiValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Required,
    Perceived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosMatrix {
    pub kind: MatrixKind,
    /// One row per organisation, one column per criterion.
    pub rows: Vec<Vec<f64>>,
}

impl QosMatrix {
    pub fn new(kind: MatrixKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = QosMatrix { kind, rows };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let cols = self.rows.first().map_or(0, Vec::len);
        if self.rows.is_empty() || cols == 0 {
            return Err(Error::DimensionMismatch("matrix needs at least one row and one column".into()));
        }
        if self.rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("matrix rows differ in length".into()));
        }
        if self.rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(())
    }

    pub fn organisations(&self) -> usize {
        self.rows.len()
    }

    pub fn criteria(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Row-major flattening: organisation 0's criteria first.
    pub fn flatten(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Perspective {
    #[serde(rename = "k_ru")]
    Required,
    #[serde(rename = "k_p")]
    Planned,
    #[serde(rename = "k_a")]
    Achieved,
    #[serde(rename = "k_pu")]
    Perceived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiVector {
    pub role: Perspective,
    pub entries: BTreeMap<String, f64>,
}

impl KpiVector {
    pub fn new(role: Perspective, entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        KpiVector {
            role,
            entries: entries.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries.get(key).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    WeightedMean,
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingRow {
    pub key: String,
    #[serde(default)]
    pub mode: Aggregation,
    /// One weight per flattened matrix entry.
    pub weights: Vec<f64>,
}

/// The configured map from a flattened N×L matrix into KPI space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingSpec {
    pub rows: Vec<MappingRow>,
}

impl MappingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::DimensionMismatch("mapping has no rows".into()));
        }
        let width = self.rows[0].weights.len();
        let mut keys = BTreeSet::new();
        for row in &self.rows {
            if !keys.insert(row.key.as_str()) {
                return Err(Error::Config(format!("duplicate mapping key {}", row.key)));
            }
            if row.weights.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "mapping row {} has {} weights, expected {width}",
                    row.key,
                    row.weights.len()
                )));
            }
            if row.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::Config(format!("mapping row {}: weights must be finite and ≥ 0", row.key)));
            }
            if row.weights.iter().all(|w| *w == 0.0) {
                return Err(Error::Config(format!("mapping row {} has no nonzero weight", row.key)));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, |r| r.weights.len())
    }
}

/// Applies the mapping to a requirement or perception matrix. Weighted-mean
/// rows are normalised to unit weight sum; max/min rows range over the
/// entries with nonzero weight.
pub fn map_requirements(matrix: &QosMatrix, spec: &MappingSpec) -> Result<KpiVector> {
    matrix.validate()?;
    spec.validate()?;
    let flat = matrix.flatten();
    if flat.len() != spec.width() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {}×{} = {} entries, mapping expects {}",
            matrix.organisations(),
            matrix.criteria(),
            flat.len(),
            spec.width()
        )));
    }
    let role = match matrix.kind {
        MatrixKind::Required => Perspective::Required,
        MatrixKind::Perceived => Perspective::Perceived,
    };
    let entries = spec.rows.iter().map(|row| {
        let selected = row.weights.iter().zip(&flat).filter(|(w, _)| **w > 0.0);
        let value = match row.mode {
            Aggregation::WeightedMean => {
                let total: f64 = row.weights.iter().sum();
                selected.map(|(w, x)| w / total * x).sum()
            }
            Aggregation::Max => selected.map(|(_, x)| *x).fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Min => selected.map(|(_, x)| *x).fold(f64::INFINITY, f64::min),
        };
        (row.key.clone(), value)
    });
    Ok(KpiVector::new(role, entries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    /// Worst observed value: max for lower-is-better indicators, min otherwise.
    Worst,
    Mean,
}

/// Binds one key of the achieved vector to KPI-engine output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub key: String,
    pub kpi: Kpi,
    #[serde(default = "worst")]
    pub reduce: Reducer,
}

fn worst() -> Reducer {
    Reducer::Worst
}

/// Builds the achieved-QoS vector from computed indicators.
pub fn bind_achieved(values: &[KpiValue], bindings: &[Binding]) -> Result<KpiVector> {
    let mut entries = BTreeMap::new();
    for b in bindings {
        let xs: Vec<f64> = values.iter().filter(|v| v.name == b.kpi).filter_map(|v| v.value).collect();
        if xs.is_empty() {
            return Err(Error::NoData(format!("no defined values of {} for key {}", b.kpi, b.key)));
        }
        let v = match b.reduce {
            Reducer::Mean => xs.iter().sum::<f64>() / xs.len() as f64,
            Reducer::Worst if b.kpi.higher_is_better() => xs.iter().copied().fold(f64::INFINITY, f64::min),
            Reducer::Worst => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
        entries.insert(b.key.clone(), v);
    }
    Ok(KpiVector {
        role: Perspective::Achieved,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GapMetric {
    /// Largest absolute pairwise delta over every KPI.
    #[default]
    MaxAbsDelta,
    /// Number of pairwise deltas whose magnitude exceeds `band`.
    ToleranceBand { band: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub key: String,
    pub required: f64,
    pub planned: f64,
    pub achieved: f64,
    pub perceived: f64,
    pub planned_minus_required: f64,
    pub achieved_minus_planned: f64,
    pub perceived_minus_achieved: f64,
}

impl GapRow {
    fn deltas(&self) -> [f64; 3] {
        [self.planned_minus_required, self.achieved_minus_planned, self.perceived_minus_achieved]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub metric: GapMetric,
    pub rows: Vec<GapRow>,
    pub aggregate: f64,
}

pub fn convergence_gap(k_ru: &KpiVector, k_p: &KpiVector, k_a: &KpiVector, k_pu: &KpiVector) -> Result<GapReport> {
    convergence_gap_with(k_ru, k_p, k_a, k_pu, GapMetric::MaxAbsDelta)
}

/// Per-KPI deltas between consecutive perspectives (planned − required,
/// achieved − planned, perceived − achieved) and an aggregate under `metric`.
pub fn convergence_gap_with(
    k_ru: &KpiVector,
    k_p: &KpiVector,
    k_a: &KpiVector,
    k_pu: &KpiVector,
    metric: GapMetric,
) -> Result<GapReport> {
    let keys: BTreeSet<&String> = k_ru.entries.keys().collect();
    for (name, v) in [("k_p", k_p), ("k_a", k_a), ("k_pu", k_pu)] {
        let other: BTreeSet<&String> = v.entries.keys().collect();
        if other != keys {
            return Err(Error::DimensionMismatch(format!("{name} keys differ from k_ru keys")));
        }
    }
    let rows: Vec<GapRow> = keys
        .into_iter()
        .map(|k| {
            let (r, p, a, u) = (k_ru.entries[k], k_p.entries[k], k_a.entries[k], k_pu.entries[k]);
            GapRow {
                key: k.clone(),
                required: r,
                planned: p,
                achieved: a,
                perceived: u,
                planned_minus_required: p - r,
                achieved_minus_planned: a - p,
                perceived_minus_achieved: u - a,
            }
        })
        .collect();
    let deltas = rows.iter().flat_map(GapRow::deltas);
    let aggregate = match metric {
        GapMetric::MaxAbsDelta => deltas.map(f64::abs).fold(0.0, f64::max),
        GapMetric::ToleranceBand { band } => deltas.filter(|d| d.abs() > band).count() as f64,
    };
    Ok(GapReport { metric, rows, aggregate })
}

impl GapReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| KPI | required | planned | achieved | perceived | planned-required | achieved-planned | perceived-achieved |\n\
             |---|---:|---:|---:|---:|---:|---:|---:|\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} |",
                r.key,
                r.required,
                r.planned,
                r.achieved,
                r.perceived,
                r.planned_minus_required,
                r.achieved_minus_planned,
                r.perceived_minus_achieved
            );
        }
        let label = match self.metric {
            GapMetric::MaxAbsDelta => "max |delta|".to_string(),
            GapMetric::ToleranceBand { band } => format!("deltas outside ±{band}"),
        };
        let _ = writeln!(out, "\nAggregate gap ({label}): {:.3}", self.aggregate);
        out
    }
}

/// Inputs for one convergence review: the two organisation matrices, their
/// mappings, the planned targets and how achieved values are read off the
/// KPI engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosStudy {
    pub required: QosMatrix,
    pub perceived: QosMatrix,
    pub mapping: MappingSpec,
    /// Defaults to `mapping` when the perception survey uses the same layout.
    #[serde(default)]
    pub perceived_mapping: Option<MappingSpec>,
    pub planned: BTreeMap<String, f64>,
    pub bindings: Vec<Binding>,
    #[serde(default)]
    pub metric: GapMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutcome {
    pub k_ru: KpiVector,
    pub k_p: KpiVector,
    pub k_a: KpiVector,
    pub k_pu: KpiVector,
    pub gap: GapReport,
}

impl QosStudy {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let study: QosStudy = serde_json::from_slice(bytes)?;
        if study.required.kind != MatrixKind::Required || study.perceived.kind != MatrixKind::Perceived {
            return Err(Error::Config("`required` and `perceived` matrices have the wrong kind".into()));
        }
        Ok(study)
    }

    pub fn evaluate(&self, achieved: &[KpiValue]) -> Result<StudyOutcome> {
        let k_ru = map_requirements(&self.required, &self.mapping)?;
        let k_pu = map_requirements(&self.perceived, self.perceived_mapping.as_ref().unwrap_or(&self.mapping))?;
        let k_p = KpiVector::new(Perspective::Planned, self.planned.clone());
        let k_a = bind_achieved(achieved, &self.bindings)?;
        let gap = convergence_gap_with(&k_ru, &k_p, &k_a, &k_pu, self.metric)?;
        Ok(StudyOutcome { k_ru, k_p, k_a, k_pu, gap })
    }
}
