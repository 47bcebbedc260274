//! C ABI over `coxcent`: opaque analysis handles, status codes and a JSON
//! report accessor. Strings returned to C are freed with
//! [`coxcent_string_free`]; handles with [`coxcent_analysis_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coxcent::error::CoxError;
use coxcent::geometry::System;
use coxcent::graph::parse_instance;
use coxcent::oracle::brute_force_centralizer;
use coxcent::report::{analyze, Analysis, Config};

/// Status codes; the nonzero input/budget/invariant values match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoxStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    Budget = 3,
    Invariant = 4,
    Panic = 5,
}

/// Opaque result of an analysis.
pub struct CoxAnalysis {
    inner: Analysis,
}

/// Group orders computed by brute-force enumeration.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CoxOracleOrders {
    pub group: u64,
    pub parabolic: u64,
    pub centralizer: u64,
    pub normalizer: u64,
}

/// Integer summary of an analysis. `free_rank` is −1 when `π₁` is not visibly free.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CoxSummary {
    pub vertices: u64,
    pub loops: u64,
    pub edges: u64,
    pub cells: u64,
    pub tours: u64,
    pub pi1_generators: u64,
    pub free_rank: i64,
    pub window_classes: u64,
    pub center_order: u64,
    pub a_group_order: u64,
    pub normalizer_symmetries: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &CoxError) -> CoxStatus {
    match e.exit_code() {
        2 => CoxStatus::InvalidInput,
        3 => CoxStatus::Budget,
        _ => CoxStatus::Invariant,
    }
}

fn guarded(f: impl FnOnce() -> Result<(), (CoxStatus, String)>) -> CoxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoxStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CoxStatus::Panic
        }
    }
}

fn lift(e: CoxError) -> (CoxStatus, String) {
    (status_of(&e), e.to_string())
}

/// # Safety
/// `p` must be null or a NUL-terminated string valid for reads.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CoxStatus, String)> {
    if p.is_null() {
        return Err((CoxStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CoxStatus::InvalidInput, format!("{what} is not UTF-8")))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn coxcent_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Runs the full analysis on an instance document.
///
/// # Safety
/// `document` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coxcent_analyze(
    document: *const c_char,
    bound: u32,
    tree_preference: *const c_char,
    out: *mut *mut CoxAnalysis,
) -> CoxStatus {
    guarded(|| {
        if out.is_null() {
            return Err((CoxStatus::NullArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let text = read_str(document, "document")?;
        let tree_preference = if tree_preference.is_null() {
            None
        } else {
            Some(read_str(tree_preference, "tree_preference")?.to_string())
        };
        let inst = parse_instance(text).map_err(|e| lift(e.into()))?;
        let config = Config { bound: bound as usize, tree_preference, ..Config::default() };
        let inner = analyze(&inst, &config).map_err(lift)?;
        *out = Box::into_raw(Box::new(CoxAnalysis { inner }));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`coxcent_analyze`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn coxcent_analysis_free(handle: *mut CoxAnalysis) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live analysis handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coxcent_summary(handle: *const CoxAnalysis, out: *mut CoxSummary) -> CoxStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            return Err((CoxStatus::NullArgument, "handle or out is null".into()));
        }
        let a = &(*handle).inner;
        *out = CoxSummary {
            vertices: a.cg.vertices().len() as u64,
            loops: a.cg.loop_edges().count() as u64,
            edges: a.cg.nonloop_edges().count() as u64,
            cells: a.tours.cells.len() as u64,
            tours: a.tours.shuttles.len() as u64,
            pi1_generators: a.pi1.simplified.surviving.len() as u64,
            free_rank: a.pi1.rank_if_free.map_or(-1, |r| r as i64),
            window_classes: a.window.classes.len() as u64,
            center_order: a.half_turns.center_order(),
            a_group_order: a.half_turns.a_group.len() as u64,
            normalizer_symmetries: a.normalizer.order() as u64,
        };
        Ok(())
    })
}

/// Writes the JSON report; free the string with [`coxcent_string_free`].
///
/// # Safety
/// `handle` must be a live analysis handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coxcent_report_json(handle: *const CoxAnalysis, out: *mut *mut c_char) -> CoxStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            return Err((CoxStatus::NullArgument, "handle or out is null".into()));
        }
        *out = ptr::null_mut();
        let json = serde_json::to_string(&(*handle).inner.report())
            .map_err(|e| (CoxStatus::Invariant, e.to_string()))?;
        let c = CString::new(json).map_err(|e| (CoxStatus::Invariant, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not freed yet.
#[no_mangle]
pub unsafe extern "C" fn coxcent_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Brute-force orders for a finite group; `cap` bounds the enumeration.
///
/// # Safety
/// `document` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coxcent_oracle(document: *const c_char, cap: u64, out: *mut CoxOracleOrders) -> CoxStatus {
    guarded(|| {
        if out.is_null() {
            return Err((CoxStatus::NullArgument, "out is null".into()));
        }
        if cap == 0 {
            return Err((CoxStatus::InvalidInput, "cap must be positive".into()));
        }
        let text = read_str(document, "document")?;
        let inst = parse_instance(text).map_err(|e| lift(e.into()))?;
        let sys = System::new(inst.graph).map_err(lift)?;
        let r = brute_force_centralizer(&sys, &inst.subset, cap as usize).map_err(lift)?;
        *out = CoxOracleOrders {
            group: r.group_order,
            parabolic: r.parabolic_order,
            centralizer: r.centralizer_order,
            normalizer: r.normalizer_order,
        };
        Ok(())
    })
}
