use coiso_ffi::*;
use serde_json::Value;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

fn last_error() -> Option<String> {
    let p = coiso_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn builtin(name: &str) -> *mut CoisoScenario {
    let name = CString::new(name).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { coiso_scenario_builtin(name.as_ptr(), &mut sc) }, CoisoStatus::Ok);
    assert!(!sc.is_null());
    sc
}

fn run(sc: *const CoisoScenario, tasks: &[&str]) -> (CoisoStatus, *mut CoisoReport) {
    let owned: Vec<CString> = tasks.iter().map(|t| CString::new(*t).unwrap()).collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|c| c.as_ptr()).collect();
    let mut report = ptr::null_mut();
    let status = unsafe { coiso_scenario_run(sc, if ptrs.is_empty() { ptr::null() } else { ptrs.as_ptr() }, ptrs.len(), &mut report) };
    (status, report)
}

fn render(report: *const CoisoReport, format: i32) -> String {
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { coiso_report_render(report, format, &mut out) }, CoisoStatus::Ok);
    let s = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { coiso_string_free(out) };
    s
}

#[test]
fn torus_kuranishi_through_the_c_abi() {
    let sc = builtin("torus-obstructed");
    let (status, report) = run(sc, &["kuranishi"]);
    assert_eq!(status, CoisoStatus::Ok);
    assert_eq!(unsafe { coiso_report_exit_code(report) }, 0);
    assert_eq!(unsafe { coiso_report_task_count(report) }, 1);
    let v: Value = serde_json::from_str(&render(report, COISO_FORMAT_JSON)).unwrap();
    let r = &v["tasks"][0]["result"];
    assert_eq!(r["zero_mode_text"], "(sin(ph_3))*dph_1^dph_2");
    assert_eq!(r["integrals"][0]["value"], "(2*pi)^2 * (sin(ph_3))");
    assert!(render(report, COISO_FORMAT_TEXT).starts_with("scenario: torus-obstructed\n"));
    unsafe {
        coiso_report_free(report);
        coiso_scenario_free(sc);
    }
}

#[test]
fn default_tasks_match_the_library() {
    for name in coiso::cli::BUILTINS {
        let sc = builtin(name);
        let (status, report) = run(sc, &[]);
        assert_eq!(status, CoisoStatus::Ok);
        let lib = coiso::cli::load_scenario(coiso::cli::builtin(name).unwrap()).unwrap();
        let tasks = coiso::cli::select_tasks(&lib, &[]).unwrap();
        let expected = coiso::cli::render(&coiso::cli::run(&lib, &tasks), coiso::cli::Format::Json);
        assert_eq!(render(report, COISO_FORMAT_JSON), expected, "{name}");
        unsafe {
            coiso_report_free(report);
            coiso_scenario_free(sc);
        }
    }
}

#[test]
fn scenario_from_json() {
    let src = CString::new(r#"{"schema": 1, "jet": {"base_dim": 1}}"#).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { coiso_scenario_from_json(src.as_ptr(), &mut sc) }, CoisoStatus::Ok);
    assert!(last_error().is_none());
    let (status, report) = run(sc, &["check-jacobi", "mc"]);
    assert_eq!(status, CoisoStatus::Ok);
    assert_eq!(unsafe { coiso_report_exit_code(report) }, 2);
    assert_eq!(unsafe { coiso_report_task_count(report) }, 2);
    unsafe {
        coiso_report_free(report);
        coiso_scenario_free(sc);
    }
}

#[test]
fn error_codes() {
    let mut sc = ptr::null_mut();
    let broken = CString::new(r#"{"schema": 1, "jet": {"base_dim": }"#).unwrap();
    assert_eq!(unsafe { coiso_scenario_from_json(broken.as_ptr(), &mut sc) }, CoisoStatus::Parse);
    assert!(sc.is_null());
    assert!(last_error().unwrap().contains("line 1"));

    let schema = CString::new(r#"{"schema": 7, "jet": {"base_dim": 1}}"#).unwrap();
    assert_eq!(unsafe { coiso_scenario_from_json(schema.as_ptr(), &mut sc) }, CoisoStatus::Validation);

    let unknown = CString::new("nope").unwrap();
    assert_eq!(unsafe { coiso_scenario_builtin(unknown.as_ptr(), &mut sc) }, CoisoStatus::Usage);
    assert_eq!(unsafe { coiso_scenario_builtin(ptr::null(), &mut sc) }, CoisoStatus::NullPointer);
    assert_eq!(unsafe { coiso_scenario_builtin(unknown.as_ptr(), ptr::null_mut()) }, CoisoStatus::NullPointer);

    let bad_utf8: [u8; 3] = [0xff, 0xfe, 0];
    assert_eq!(unsafe { coiso_scenario_from_json(bad_utf8.as_ptr().cast(), &mut sc) }, CoisoStatus::InvalidUtf8);

    let live = builtin("torus-obstructed");
    let (status, report) = run(live, &["frobnicate"]);
    assert_eq!(status, CoisoStatus::Usage);
    assert!(report.is_null());
    assert!(last_error().unwrap().contains("frobnicate"));
    let (status, _) = run(ptr::null(), &[]);
    assert_eq!(status, CoisoStatus::NullPointer);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { coiso_scenario_run(live, ptr::null(), 2, &mut report) }, CoisoStatus::NullPointer);

    let (_, report) = run(live, &["check-jacobi"]);
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { coiso_report_render(report, 9, &mut out) }, CoisoStatus::Usage);
    assert_eq!(unsafe { coiso_report_render(ptr::null(), COISO_FORMAT_JSON, &mut out) }, CoisoStatus::NullPointer);
    assert!(out.is_null());
    assert_eq!(unsafe { coiso_report_exit_code(ptr::null()) }, -1);
    assert_eq!(unsafe { coiso_report_task_count(ptr::null()) }, 0);
    unsafe {
        coiso_report_free(report);
        coiso_scenario_free(live);
        coiso_report_free(ptr::null_mut());
        coiso_scenario_free(ptr::null_mut());
        coiso_string_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_the_last_error() {
    let unknown = CString::new("nope").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { coiso_scenario_builtin(unknown.as_ptr(), &mut sc) }, CoisoStatus::Usage);
    assert!(last_error().is_some());
    let sc = builtin("legendrian-jet");
    assert!(last_error().is_none());
    unsafe { coiso_scenario_free(sc) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(coiso_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
