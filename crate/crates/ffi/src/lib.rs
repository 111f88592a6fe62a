//! C ABI for the tetra-qos toolkit.
//!
//! Every function returns a [`TqStatus`]. Results come back through out
//! pointers; strings handed out by the library must be released with
//! [`tq_string_free`], stores with [`tq_store_free`]. After a failure,
//! [`tq_last_error`] describes it until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, size_t};

use tetra_qos::counters::{parse_counter_source, validate, ClusterConfig, CounterStore};
use tetra_qos::error::Error;
use tetra_qos::netsim::{emit_counters, emit_truth, simulate, SimConfig};
use tetra_qos::report::{
    build_report, kpi_listing, parse_thresholds, render_json, KpiFilter, PeriodKind, ReportConfig,
};
use tetra_qos::teletraffic::{self, TrafficLoad};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    MalformedInput = 3,
    InvariantViolation = 4,
    DuplicateWindow = 5,
    NoData = 6,
    Config = 7,
    Domain = 8,
    UnstableLoad = 9,
    DimensionMismatch = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TqPeriod {
    Daily = 0,
    Weekly = 1,
    Monthly = 2,
}

/// Opaque handle to a validated counter store.
pub struct TqStore {
    inner: CounterStore,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TqStatus {
    match e {
        Error::MalformedRow { .. } | Error::UnknownColumn(_) | Error::Json(_) => TqStatus::MalformedInput,
        Error::InvariantViolation { .. } => TqStatus::InvariantViolation,
        Error::DuplicateWindow { .. } => TqStatus::DuplicateWindow,
        Error::NoData(_) => TqStatus::NoData,
        Error::Config(_) => TqStatus::Config,
        Error::Domain(_) => TqStatus::Domain,
        Error::UnstableLoad { .. } => TqStatus::UnstableLoad,
        Error::DimensionMismatch(_) => TqStatus::DimensionMismatch,
        Error::Io(_) => TqStatus::Io,
    }
}

struct Fail(TqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TqStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TqStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(TqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TqStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s).expect("library output has no nul bytes").into_raw()
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn tq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates counter records (CSV, or a JSON array) into a new
/// store.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_store_from_counters(data: *const u8, len: size_t, out: *mut *mut TqStore) -> TqStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let mut store = CounterStore::new();
        for r in parse_counter_source(bytes)? {
            store.insert(validate(r)?)?;
        }
        put(out, Box::into_raw(Box::new(TqStore { inner: store })), "out")
    })
}

/// Opens a store file written by the `ingest` command.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_store_open(path: *const c_char, out: *mut *mut TqStore) -> TqStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let bytes = std::fs::read(path).map_err(Error::from)?;
        let store = CounterStore::from_json(&bytes)?;
        put(out, Box::into_raw(Box::new(TqStore { inner: store })), "out")
    })
}

/// # Safety
/// `store` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn tq_store_free(store: *mut TqStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Number of hourly records held; 0 for NULL.
///
/// # Safety
/// `store` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_store_len(store: *const TqStore) -> size_t {
    store.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_erlang_b(n_channels: u32, offered: f64, out: *mut f64) -> TqStatus {
    guard(|| put(out, teletraffic::erlang_b(n_channels, offered)?, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_erlang_c(n_channels: u32, offered: f64, out: *mut f64) -> TqStatus {
    guard(|| put(out, teletraffic::erlang_c(n_channels, offered)?, "out"))
}

/// Unconditional mean wait in seconds.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_mean_wait(n_channels: u32, arrival_rate: f64, mean_holding: f64, out: *mut f64) -> TqStatus {
    guard(|| {
        let load = TrafficLoad::new(arrival_rate, mean_holding)?;
        put(out, teletraffic::mean_wait(n_channels, &load)?, "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_dimension(offered: f64, mean_holding: f64, max_wait_prob: f64, out: *mut u32) -> TqStatus {
    guard(|| {
        let load = TrafficLoad::from_offered(offered, mean_holding)?;
        put(out, teletraffic::dimension_channels(&load, max_wait_prob)?, "out")
    })
}

/// KPI values as a JSON array. `tbs` and `date` (YYYY-MM-DD) may be NULL to
/// select everything.
///
/// # Safety
/// `store` must be a live handle, string arguments NULL or NUL-terminated,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tq_kpi_json(
    store: *const TqStore,
    tbs: *const c_char,
    date: *const c_char,
    out: *mut *mut c_char,
) -> TqStatus {
    guard(|| {
        let store = store.as_ref().ok_or_else(|| null("store"))?;
        let date = opt_str_arg(date, "date")?
            .map(|d| {
                d.parse()
                    .map_err(|e| Fail(TqStatus::MalformedInput, format!("date `{d}`: {e}")))
            })
            .transpose()?;
        let filter = KpiFilter {
            tbs: opt_str_arg(tbs, "tbs")?.map(str::to_string),
            date,
            category: None,
        };
        let values = kpi_listing(&store.inner, &filter, tetra_qos::kpi::DEFAULT_RAC_THRESHOLD)?;
        let json = serde_json::to_string(&values).map_err(Error::from)?;
        put(out, into_c(json), "out")
    })
}

/// Full report as JSON. `clusters_json` and `thresholds_json` may be NULL.
///
/// # Safety
/// `store` must be a live handle, string arguments NULL or NUL-terminated,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tq_report_json(
    store: *const TqStore,
    period: TqPeriod,
    clusters_json: *const c_char,
    thresholds_json: *const c_char,
    out: *mut *mut c_char,
) -> TqStatus {
    guard(|| {
        let store = store.as_ref().ok_or_else(|| null("store"))?;
        let clusters = match opt_str_arg(clusters_json, "clusters_json")? {
            Some(s) => ClusterConfig::from_json(s.as_bytes())?,
            None => ClusterConfig::default(),
        };
        let thresholds = opt_str_arg(thresholds_json, "thresholds_json")?
            .map(|s| parse_thresholds(s.as_bytes()))
            .transpose()?;
        let config = ReportConfig {
            period: match period {
                TqPeriod::Daily => PeriodKind::Daily,
                TqPeriod::Weekly => PeriodKind::Weekly,
                TqPeriod::Monthly => PeriodKind::Monthly,
            },
            thresholds,
            clusters,
            ..Default::default()
        };
        let report = build_report(&store.inner, &config)?;
        put(out, into_c(render_json(&report)?), "out")
    })
}

/// Runs the simulator. Both outputs are set on success.
///
/// # Safety
/// `config_json` must be NUL-terminated; both out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn tq_simulate(
    config_json: *const c_char,
    counters_csv: *mut *mut c_char,
    truth_json: *mut *mut c_char,
) -> TqStatus {
    guard(|| {
        let cfg = SimConfig::from_json(str_arg(config_json, "config_json")?.as_bytes())?;
        if counters_csv.is_null() || truth_json.is_null() {
            return Err(null("output pointer"));
        }
        let output = simulate(&cfg)?;
        let truth = emit_truth(&output)?;
        put(counters_csv, into_c(emit_counters(&output)), "counters_csv")?;
        put(truth_json, into_c(truth), "truth_json")
    })
}
