use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use tetra_qos::counters::{parse_counter_source, ClusterConfig, CounterStore, StoreSummary};
use tetra_qos::error::{Error, Result};
use tetra_qos::kpi::{Category, DEFAULT_RAC_THRESHOLD};
use tetra_qos::netsim::{emit_counters, emit_truth, simulate, SimConfig};
use tetra_qos::qos::QosStudy;
use tetra_qos::report::{
    build_report, kpi_listing, parse_thresholds, render, render_kpi_csv, KpiFilter, OutputFormat, PeriodKind,
    ReportConfig,
};
use tetra_qos::teletraffic::{dimension_table, TrafficLoad};

#[derive(Parser)]
#[command(name = "tetra-qos", version, about = "QoS indicators and reports for TETRA base stations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    #[value(alias = "markdown")]
    Md,
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Md => OutputFormat::Markdown,
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Period {
    Daily,
    Weekly,
    Monthly,
}

impl From<Period> for PeriodKind {
    fn from(p: Period) -> Self {
        match p {
            Period::Daily => PeriodKind::Daily,
            Period::Weekly => PeriodKind::Weekly,
            Period::Monthly => PeriodKind::Monthly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CategoryArg {
    Availability,
    Resource,
    Attachment,
    Handover,
    Voice,
    Data,
}

impl From<CategoryArg> for Category {
    fn from(c: CategoryArg) -> Self {
        match c {
            CategoryArg::Availability => Category::Availability,
            CategoryArg::Resource => Category::Resource,
            CategoryArg::Attachment => Category::Attachment,
            CategoryArg::Handover => Category::Handover,
            CategoryArg::Voice => Category::Voice,
            CategoryArg::Data => Category::Data,
        }
    }
}

const DEFAULT_STORE: &str = "tetra-qos-store.json";

#[derive(Subcommand)]
enum Command {
    /// Validate counter files (CSV or JSON) and write them to a store.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, default_value = DEFAULT_STORE)]
        store: PathBuf,
        /// Add to an existing store instead of starting a new one.
        #[arg(long)]
        append: bool,
        #[arg(long)]
        clusters: Option<PathBuf>,
        /// Reject stations missing from the cluster configuration.
        #[arg(long, requires = "clusters")]
        strict: bool,
    },
    /// List KPI values for the selected stations, days and category.
    Kpi {
        #[arg(long, default_value = DEFAULT_STORE)]
        store: PathBuf,
        #[arg(long)]
        tbs: Option<String>,
        #[arg(long)]
        date: Option<NaiveDate>,
        #[arg(long, value_enum)]
        category: Option<CategoryArg>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_RAC_THRESHOLD)]
        rac_threshold: u64,
    },
    /// Periodic QoS report.
    Report {
        #[arg(long, default_value = DEFAULT_STORE)]
        store: PathBuf,
        #[arg(long)]
        clusters: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "daily")]
        period: Period,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "md")]
        format: Vec<Format>,
        #[arg(long)]
        thresholds: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
        /// Directory for report files; without it reports go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RAC_THRESHOLD)]
        rac_threshold: u64,
    },
    /// Run the traffic simulator and write counters.csv and truth.json.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Smallest channel count meeting a waiting-probability target.
    Dimension {
        /// Offered traffic in Erlangs.
        #[arg(long)]
        offered: f64,
        /// Largest acceptable probability of waiting.
        #[arg(long)]
        target: f64,
        /// Mean holding time in seconds.
        #[arg(long, default_value_t = 1.0)]
        holding: f64,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
    /// Compare required, planned, achieved and perceived QoS.
    Qos {
        study: PathBuf,
        #[arg(long, default_value = DEFAULT_STORE)]
        store: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_store(path: &Path) -> Result<CounterStore> {
    CounterStore::from_json(&read(path)?)
}

fn load_clusters(path: Option<&Path>) -> Result<ClusterConfig> {
    path.map_or_else(|| Ok(ClusterConfig::default()), |p| ClusterConfig::from_json(&read(p)?))
}

fn summary_text(s: &StoreSummary) -> String {
    let span = match (s.first_day, s.last_day) {
        (Some(a), Some(b)) => format!("{a} to {b}"),
        _ => "empty".into(),
    };
    let mut out = format!(
        "records: {}\nstations: {}\ndays: {} ({span})\ncoverage: {:.1}%\n",
        s.records,
        s.tbs_count,
        s.days,
        s.coverage * 100.0
    );
    if s.gaps.is_empty() {
        out.push_str("gaps: none\n");
    } else {
        out.push_str("gaps:\n");
        for g in &s.gaps {
            out.push_str(&format!("  {} {}: {}/24 hours\n", g.tbs_id, g.date, g.hours_present));
        }
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            paths,
            store,
            append,
            clusters,
            strict,
        } => {
            let mut db = if append && store.exists() {
                load_store(&store)?
            } else {
                CounterStore::new()
            };
            let clusters = load_clusters(clusters.as_deref())?;
            for path in &paths {
                let records = parse_counter_source(&read(path)?).map_err(|e| in_file(path, e))?;
                for r in records {
                    if strict && !clusters.knows(&r.tbs_id) {
                        return Err(Error::Config(format!(
                            "{}: station {} is not in the cluster configuration",
                            path.display(),
                            r.tbs_id
                        )));
                    }
                    db.insert(tetra_qos::counters::validate(r)?)?;
                }
            }
            fs::write(&store, db.to_json()?)?;
            print!("{}", summary_text(&db.summary()));
        }
        Command::Kpi {
            store,
            tbs,
            date,
            category,
            format,
            rac_threshold,
        } => {
            let db = load_store(&store)?;
            let filter = KpiFilter {
                tbs,
                date,
                category: category.map(Into::into),
            };
            let values = kpi_listing(&db, &filter, rac_threshold)?;
            match format {
                Format::Csv => print!("{}", render_kpi_csv(&values)?),
                Format::Json | Format::Md => println!("{}", serde_json::to_string_pretty(&values)?),
            }
        }
        Command::Report {
            store,
            clusters,
            period,
            format,
            thresholds,
            strict,
            out,
            rac_threshold,
        } => {
            let db = load_store(&store)?;
            let mut formats: Vec<OutputFormat> = format.into_iter().map(Into::into).collect();
            formats.dedup();
            let config = ReportConfig {
                period: period.into(),
                thresholds: thresholds.as_deref().map(|p| parse_thresholds(&read(p)?)).transpose()?,
                clusters: load_clusters(clusters.as_deref())?,
                formats,
                rac_threshold,
                strict,
            };
            let report = build_report(&db, &config)?;
            for f in &config.formats {
                let text = render(&report, *f, config.thresholds.as_ref())?;
                match &out {
                    Some(dir) => {
                        fs::create_dir_all(dir)?;
                        let name = format!("report-{}.{}", period_name(config.period), f.extension());
                        let path = dir.join(name);
                        fs::write(&path, text)?;
                        println!("{}", path.display());
                    }
                    None => print!("{text}"),
                }
            }
        }
        Command::Simulate { config, out, seed } => {
            let mut cfg = SimConfig::from_json(&read(&config)?)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let output = simulate(&cfg)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("counters.csv"), emit_counters(&output))?;
            fs::write(out.join("truth.json"), emit_truth(&output)?)?;
            println!("{} records written to {}", output.records.len(), out.join("counters.csv").display());
        }
        Command::Dimension {
            offered,
            target,
            holding,
            format,
        } => {
            let load = TrafficLoad::from_offered(offered, holding)?;
            let table = dimension_table(&load, target)?;
            let n = table.last().expect("table is never empty").channels;
            match format {
                Format::Json => {
                    let doc = serde_json::json!({ "channels": n, "table": table });
                    println!("{}", serde_json::to_string_pretty(&doc)?);
                }
                Format::Csv => {
                    println!("channels,wait_probability,mean_wait");
                    for r in &table {
                        println!("{},{},{}", r.channels, r.wait_probability, r.mean_wait);
                    }
                }
                Format::Md => {
                    println!("channels: {n}\n");
                    println!("| n | P(wait) | mean wait (s) |\n|---:|---:|---:|");
                    for r in &table {
                        println!("| {} | {:.6} | {:.6} |", r.channels, r.wait_probability, r.mean_wait);
                    }
                }
            }
        }
        Command::Qos { study, store, format } => {
            let study = QosStudy::from_json(&read(&study)?)?;
            let db = load_store(&store)?;
            let values = kpi_listing(&db, &KpiFilter::default(), DEFAULT_RAC_THRESHOLD)?;
            let outcome = study.evaluate(&values)?;
            match format {
                Format::Md => print!("{}", outcome.gap.to_markdown()),
                _ => println!("{}", serde_json::to_string_pretty(&outcome)?),
            }
        }
    }
    Ok(())
}

fn period_name(p: PeriodKind) -> &'static str {
    match p {
        PeriodKind::Daily => "daily",
        PeriodKind::Weekly => "weekly",
        PeriodKind::Monthly => "monthly",
    }
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::MalformedRow { line, reason } => Error::MalformedRow {
            line,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
