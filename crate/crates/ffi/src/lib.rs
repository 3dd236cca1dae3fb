//! C ABI over the scenario runner: load a scenario, run tasks, render the
//! report. Every entry point returns a [`CoisoStatus`]; on failure the
//! message is available from [`coiso_last_error`] on the same thread.

use coiso::cli::{self, CliError, Format, Report, Scenario};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoisoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Usage = 3,
    Parse = 4,
    Validation = 5,
    Internal = 6,
    Panic = 7,
}

/// Plain-text report.
pub const COISO_FORMAT_TEXT: i32 = 0;
/// Pretty-printed JSON report.
pub const COISO_FORMAT_JSON: i32 = 1;

/// A validated scenario. Opaque.
pub struct CoisoScenario {
    inner: Scenario,
}

/// The outcome of running tasks on a scenario. Opaque.
pub struct CoisoReport {
    inner: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(CoisoStatus, String);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e {
            CliError::Usage(_) => CoisoStatus::Usage,
            CliError::Parse(_) => CoisoStatus::Parse,
            CliError::Validation(_) => CoisoStatus::Validation,
            CliError::Internal(_) => CoisoStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f` behind a panic guard and records its error.
fn guarded(f: impl FnOnce() -> Result<(), Failure>) -> CoisoStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoisoStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CoisoStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(CoisoStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(CoisoStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn null_out(what: &str) -> Failure {
    Failure(CoisoStatus::NullPointer, format!("{what} is null"))
}

fn store_scenario(src: &str, out: *mut *mut CoisoScenario) -> Result<(), Failure> {
    let inner = cli::load_scenario(src)?;
    // SAFETY: the caller checked `out` for null.
    unsafe { *out = Box::into_raw(Box::new(CoisoScenario { inner })) };
    Ok(())
}

/// Parses and validates scenario JSON. On success `*out` owns a handle to
/// release with [`coiso_scenario_free`].
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn coiso_scenario_from_json(json: *const c_char, out: *mut *mut CoisoScenario) -> CoisoStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_out("out"));
        }
        store_scenario(read_str(json, "json")?, out)
    })
}

/// Loads a built-in scenario by name (`torus-obstructed`, `legendrian-jet`).
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn coiso_scenario_builtin(name: *const c_char, out: *mut *mut CoisoScenario) -> CoisoStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_out("out"));
        }
        let name = read_str(name, "name")?;
        let src = cli::builtin(name).ok_or_else(|| Failure(CoisoStatus::Usage, format!("unknown built-in scenario `{name}`")))?;
        store_scenario(src, out)
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `scenario` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coiso_scenario_free(scenario: *mut CoisoScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs `n_tasks` task labels (`NAME[:ARG]`), or the scenario's defaults when
/// `n_tasks` is 0. Per-task failures are part of the report, see
/// [`coiso_report_exit_code`].
///
/// # Safety
/// `scenario` is a live handle; `tasks` points to `n_tasks` NUL-terminated
/// strings (may be null when `n_tasks` is 0); `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn coiso_scenario_run(
    scenario: *const CoisoScenario,
    tasks: *const *const c_char,
    n_tasks: usize,
    out: *mut *mut CoisoReport,
) -> CoisoStatus {
    guarded(|| {
        if scenario.is_null() {
            return Err(null_out("scenario"));
        }
        if out.is_null() {
            return Err(null_out("out"));
        }
        if tasks.is_null() && n_tasks > 0 {
            return Err(null_out("tasks"));
        }
        let sc = &(*scenario).inner;
        let mut labels = Vec::with_capacity(n_tasks);
        for i in 0..n_tasks {
            labels.push(read_str(*tasks.add(i), "task")?.to_string());
        }
        let selected = cli::select_tasks(sc, &labels)?;
        let inner = cli::run(sc, &selected);
        *out = Box::into_raw(Box::new(CoisoReport { inner }));
        Ok(())
    })
}

/// 0 when every task succeeded, otherwise the CLI exit status of the worst
/// failure (1 usage or parse, 2 validation, 3 internal). -1 for null.
///
/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coiso_report_exit_code(report: *const CoisoReport) -> i32 {
    match report.as_ref() {
        Some(r) => r.inner.exit_code(),
        None => -1,
    }
}

/// Number of task entries in the report; 0 for null.
///
/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coiso_report_task_count(report: *const CoisoReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.tasks.len())
}

/// Renders the report as text or JSON into a new string owned by the caller,
/// released with [`coiso_string_free`].
///
/// # Safety
/// `report` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn coiso_report_render(report: *const CoisoReport, format: i32, out: *mut *mut c_char) -> CoisoStatus {
    guarded(|| {
        let r = report.as_ref().ok_or_else(|| null_out("report"))?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        let format = match format {
            COISO_FORMAT_TEXT => Format::Text,
            COISO_FORMAT_JSON => Format::Json,
            other => return Err(Failure(CoisoStatus::Usage, format!("unknown format {other}"))),
        };
        let text = cli::render(&r.inner, format);
        let c = CString::new(text).map_err(|_| Failure(CoisoStatus::Internal, "report contains NUL".into()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coiso_report_free(report: *mut CoisoReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` is null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coiso_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn coiso_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn coiso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
