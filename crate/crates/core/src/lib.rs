//! QoS indicators for TETRA base stations: counter ingestion, KPI
//! computation, Erlang C dimensioning, a counter-emitting traffic simulator
//! and the requirement-to-KPI mapping used to track QoS convergence.

pub mod counters;
pub mod error;
pub mod kpi;
pub mod netsim;
pub mod qos;
pub mod report;
pub mod teletraffic;

pub use counters::{Cluster, ClusterConfig, ClusterMember, CounterRecord, CounterSet, CounterStore};
pub use error::{Error, Result};
pub use kpi::{Category, Kpi, KpiBundle, KpiValue, Scope};
pub use netsim::{simulate, SimConfig, SimOutput, StationConfig};
pub use report::{build_report, OutputFormat, PeriodKind, Report, ReportConfig};
pub use teletraffic::{dimension_channels, erlang_b, erlang_c, mean_wait, TrafficLoad};
