//! C ABI over `influence-core`.
//!
//! Every function returns an [`InfStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`inf_last_error`]. Handles are opaque and released with their `_free`
//! function. Strings returned by the library are released with
//! [`inf_string_free`].
//!
//! # Safety
//!
//! Pointers must be null or valid for the stated number of elements, and
//! handles must come from this library and not be used after being freed.
//! A handle may be used from one thread at a time.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use influence_core::engine::{Engine, EngineConfig, SliceReport};
use influence_core::influence::fit_two_sided;
use influence_core::portfolio::{OrderId, RawRecord, RawSlice, DESCRIPTOR_COUNT};
use influence_core::predictors::{binarize, mir, QualityFn};
use influence_core::Error;

/// Number of descriptor columns per order in `inf_engine_push_slice`.
pub const INF_DESCRIPTOR_COUNT: usize = 7;

const _: () = assert!(INF_DESCRIPTOR_COUNT == DESCRIPTOR_COUNT);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfQualityKind {
    /// `p1` when both rates reach `param`, else 0.
    Floor = 0,
    /// Smaller of the two joint rates; `param` is ignored.
    Min = 1,
    /// `param * P1 + (1 - param) * P0`.
    Weighted = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct InfQuality {
    pub kind: InfQualityKind,
    pub param: f64,
}

/// Fitted two-sided rule: fires when `z < theta_minus` or `z > theta_plus`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InfTwoSided {
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub power: f64,
    pub p1: f64,
    pub p0: f64,
}

/// Streaming engine handle.
pub struct InfEngine {
    engine: Engine,
}

/// Report of one analyzed slice.
pub struct InfReport {
    report: SliceReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: InfStatus, msg: impl Into<String>) -> InfStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> InfStatus {
    let status = match &e {
        Error::Config(_) | Error::Spec(_) => InfStatus::Config,
        Error::Io(_) => InfStatus::Io,
        Error::LengthMismatch(..) | Error::Parse { .. } => InfStatus::InvalidArgument,
        _ => InfStatus::Domain,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> InfStatus) -> InfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(InfStatus::Panic, msg)
        }
    }
}

/// Borrows `n` elements, allowing a null pointer when `n` is 0.
unsafe fn view<'a, T>(p: *const T, n: usize) -> Option<&'a [T]> {
    if n == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(p, n))
    }
}

fn quality(q: InfQuality) -> Result<QualityFn, InfStatus> {
    let qf = match q.kind {
        InfQualityKind::Floor => QualityFn::FloorPower(q.param),
        InfQualityKind::Min => QualityFn::MinPower,
        InfQualityKind::Weighted => QualityFn::Weighted(q.param),
    };
    qf.validate().map_err(from_error)?;
    Ok(qf)
}

fn bits(v: &[u8]) -> Vec<bool> {
    v.iter().map(|&b| b != 0).collect()
}

fn to_c_string(s: String, out: *mut *mut c_char) -> InfStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            InfStatus::Ok
        }
        Err(_) => fail(InfStatus::Domain, "string contains a NUL byte"),
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length, 0 when
/// there is no error.
#[no_mangle]
pub unsafe extern "C" fn inf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates an engine. `config_json` may be null for the defaults; otherwise
/// it is a JSON object whose fields override them.
#[no_mangle]
pub unsafe extern "C" fn inf_engine_new(config_json: *const c_char, out: *mut *mut InfEngine) -> InfStatus {
    guard(|| {
        if out.is_null() {
            return fail(InfStatus::NullPointer, "out is null");
        }
        let config = if config_json.is_null() {
            EngineConfig::default()
        } else {
            let Ok(text) = CStr::from_ptr(config_json).to_str() else {
                return fail(InfStatus::InvalidArgument, "config is not UTF-8");
            };
            match serde_json::from_str::<EngineConfig>(text) {
                Ok(c) => c,
                Err(e) => return fail(InfStatus::Config, format!("invalid configuration: {e}")),
            }
        };
        match Engine::new(config) {
            Ok(engine) => {
                *out = Box::into_raw(Box::new(InfEngine { engine }));
                InfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn inf_engine_free(engine: *mut InfEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Feeds one slice. `descriptors` holds `n` rows of `INF_DESCRIPTOR_COUNT`
/// raw values in portfolio CSV column order; `performance` holds `n`
/// evaluations. Slices must be pushed in increasing order.
#[no_mangle]
pub unsafe extern "C" fn inf_engine_push_slice(
    engine: *mut InfEngine,
    slice_id: u32,
    n: usize,
    order_ids: *const u32,
    descriptors: *const f64,
    performance: *const f64,
    out: *mut *mut InfReport,
) -> InfStatus {
    guard(|| {
        if engine.is_null() || out.is_null() {
            return fail(InfStatus::NullPointer, "engine or out is null");
        }
        let Some(rows) = n.checked_mul(DESCRIPTOR_COUNT) else {
            return fail(InfStatus::InvalidArgument, "order count overflows");
        };
        let (Some(ids), Some(values), Some(pe)) = (view(order_ids, n), view(descriptors, rows), view(performance, n))
        else {
            return fail(InfStatus::NullPointer, "input array is null");
        };
        let mut records: Vec<RawRecord> = (0..n)
            .map(|k| RawRecord {
                order: OrderId(ids[k]),
                values: values[k * DESCRIPTOR_COUNT..(k + 1) * DESCRIPTOR_COUNT]
                    .try_into()
                    .unwrap(),
                pe: pe[k],
            })
            .collect();
        records.sort_by_key(|r| r.order);
        if let Some(w) = records.windows(2).find(|w| w[0].order == w[1].order) {
            return fail(
                InfStatus::InvalidArgument,
                format!("order {} appears twice", w[0].order),
            );
        }
        if records
            .iter()
            .any(|r| !r.pe.is_finite() || r.values.iter().any(|v| !v.is_finite()))
        {
            return fail(InfStatus::InvalidArgument, "non-finite input value");
        }
        let raw = RawSlice {
            slice: slice_id,
            records,
        };
        match (*engine).engine.push(&raw) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(InfReport { report }));
                InfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn inf_report_free(report: *mut InfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[no_mangle]
pub unsafe extern "C" fn inf_report_slice(report: *const InfReport) -> u32 {
    report.as_ref().map_or(0, |r| r.report.slice)
}

/// Nonzero when the slice was not analyzed.
#[no_mangle]
pub unsafe extern "C" fn inf_report_is_skipped(report: *const InfReport) -> i32 {
    report.as_ref().map_or(1, |r| i32::from(r.report.is_skipped()))
}

#[no_mangle]
pub unsafe extern "C" fn inf_report_active_orders(report: *const InfReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.active_orders)
}

#[no_mangle]
pub unsafe extern "C" fn inf_report_max_influence(report: *const InfReport) -> f64 {
    report.as_ref().map_or(0.0, |r| r.report.max_influence)
}

/// Number of groups in the report (0 for a skipped slice).
#[no_mangle]
pub unsafe extern "C" fn inf_report_group_count(report: *const InfReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.groups.len())
}

/// Influence of group `index` in catalogue order.
#[no_mangle]
pub unsafe extern "C" fn inf_report_group_influence(
    report: *const InfReport,
    index: usize,
    out: *mut f64,
) -> InfStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(InfStatus::NullPointer, "report is null");
        };
        if out.is_null() {
            return fail(InfStatus::NullPointer, "out is null");
        }
        match r.report.groups.get(index) {
            Some(g) => {
                *out = g.influence;
                InfStatus::Ok
            }
            None => fail(InfStatus::InvalidArgument, format!("group index {index} out of range")),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn inf_report_dominating_count(report: *const InfReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.dominating.len())
}

/// Label of dominating group `index`, released with `inf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn inf_report_dominating(
    report: *const InfReport,
    index: usize,
    out: *mut *mut c_char,
) -> InfStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(InfStatus::NullPointer, "report is null");
        };
        if out.is_null() {
            return fail(InfStatus::NullPointer, "out is null");
        }
        match r.report.dominating.get(index) {
            Some(label) => to_c_string(label.clone(), out),
            None => fail(
                InfStatus::InvalidArgument,
                format!("dominating index {index} out of range"),
            ),
        }
    })
}

/// The full report as JSON, released with `inf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn inf_report_to_json(report: *const InfReport, out: *mut *mut c_char) -> InfStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(InfStatus::NullPointer, "report is null");
        };
        if out.is_null() {
            return fail(InfStatus::NullPointer, "out is null");
        }
        match serde_json::to_string(&r.report) {
            Ok(s) => to_c_string(s, out),
            Err(e) => fail(InfStatus::Domain, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn inf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Best two-sided rule for `y` (nonzero = bad) from `z`. With `pin_lower`
/// nonzero, `theta_minus` is fixed at 0. Infinite thresholds mean the side
/// never fires.
#[no_mangle]
pub unsafe extern "C" fn inf_fit_two_sided(
    z: *const f64,
    y: *const u8,
    n: usize,
    quality_fn: InfQuality,
    pin_lower: i32,
    out: *mut InfTwoSided,
) -> InfStatus {
    guard(|| {
        let (Some(z), Some(y)) = (view(z, n), view(y, n)) else {
            return fail(InfStatus::NullPointer, "input array is null");
        };
        if out.is_null() {
            return fail(InfStatus::NullPointer, "out is null");
        }
        let qf = match quality(quality_fn) {
            Ok(q) => q,
            Err(s) => return s,
        };
        match fit_two_sided(z, &bits(y), &qf, pin_lower != 0) {
            Ok(p) => {
                *out = InfTwoSided {
                    theta_minus: p.theta_minus,
                    theta_plus: p.theta_plus,
                    power: p.power,
                    p1: p.p1,
                    p0: p.p0,
                };
                InfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Tags the orders below the `q`-quantile of `performance`. Writes 0/1 into
/// `y_out` (length `n`) and the quantile into `threshold_out`.
#[no_mangle]
pub unsafe extern "C" fn inf_binarize(
    performance: *const f64,
    n: usize,
    q: f64,
    y_out: *mut u8,
    threshold_out: *mut f64,
) -> InfStatus {
    guard(|| {
        let Some(pe) = view(performance, n) else {
            return fail(InfStatus::NullPointer, "performance is null");
        };
        if (n > 0 && y_out.is_null()) || threshold_out.is_null() {
            return fail(InfStatus::NullPointer, "output is null");
        }
        match binarize(pe, q) {
            Ok(b) => {
                for (k, &v) in b.y.iter().enumerate() {
                    *y_out.add(k) = u8::from(v);
                }
                *threshold_out = b.threshold;
                InfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Mutual information ratio between predictions and truth, both 0/1 arrays.
#[no_mangle]
pub unsafe extern "C" fn inf_mir(yhat: *const u8, y: *const u8, n: usize, out: *mut f64) -> InfStatus {
    guard(|| {
        let (Some(yhat), Some(y)) = (view(yhat, n), view(y, n)) else {
            return fail(InfStatus::NullPointer, "input array is null");
        };
        if out.is_null() {
            return fail(InfStatus::NullPointer, "out is null");
        }
        match mir(&bits(yhat), &bits(y)) {
            Ok(v) => {
                *out = v;
                InfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
