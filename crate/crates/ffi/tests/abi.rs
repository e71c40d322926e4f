use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use weylflow_ffi::*;

fn last_error() -> String {
    let mut needed = 0usize;
    unsafe { wf_last_error_message(ptr::null_mut(), 0, &mut needed) };
    let mut buf = vec![0u8; needed];
    assert_eq!(
        unsafe { wf_last_error_message(buf.as_mut_ptr().cast(), buf.len(), &mut needed) },
        WfStatus::Ok
    );
    CStr::from_bytes_with_nul(&buf)
        .unwrap()
        .to_str()
        .unwrap()
        .to_owned()
}

#[test]
fn bound_state_through_the_abi() {
    let (mut has, mut e, mut d) = (0, 0.0, 0.0);
    assert_eq!(
        unsafe { wf_bound_state(2.0, 1.0, 0.0, &mut has, &mut e, &mut d) },
        WfStatus::Ok
    );
    assert_eq!(has, 1);
    assert!((e - 2.0 * 1.0f64.cos()).abs() < 1e-15 && (d - 2.0 * 1.0f64.sin()).abs() < 1e-15);
    assert_eq!(
        unsafe { wf_bound_state(2.0, -1.0, 0.0, &mut has, &mut e, &mut d) },
        WfStatus::Ok
    );
    assert_eq!(has, 0);
    assert_eq!(
        unsafe { wf_bound_state(-1.0, 0.0, 0.0, &mut has, &mut e, &mut d) },
        WfStatus::InvalidInput
    );
    assert!(last_error().contains("mass"));
    assert_eq!(
        unsafe { wf_bound_state(1.0, 0.0, 0.0, ptr::null_mut(), &mut e, &mut d) },
        WfStatus::NullPointer
    );
}

#[test]
fn halfline_handle_lifecycle() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { wf_halfline_create(1.0, std::f64::consts::FRAC_PI_2, 0.0, 2000, 0.01, &mut h) },
        WfStatus::Ok
    );
    let mut dim = 0;
    assert_eq!(unsafe { wf_halfline_dim(h, &mut dim) }, WfStatus::Ok);
    assert_eq!(dim, 4000);
    let mut count = 0;
    assert_eq!(
        unsafe { wf_halfline_eigenvalues(h, -0.5, 0.5, ptr::null_mut(), 0, &mut count) },
        WfStatus::BufferTooSmall
    );
    assert!(count >= 1);
    let mut vals = vec![0.0; count];
    assert_eq!(
        unsafe { wf_halfline_eigenvalues(h, -0.5, 0.5, vals.as_mut_ptr(), vals.len(), &mut count) },
        WfStatus::Ok
    );
    assert!(vals.iter().any(|v| v.abs() < 1e-8));
    assert_eq!(
        unsafe { wf_halfline_create(1.0, 0.0, 0.0, 4, 0.01, &mut h) },
        WfStatus::InvalidInput
    );
    unsafe { wf_halfline_free(h) };
    unsafe { wf_halfline_free(ptr::null_mut()) };
    assert_eq!(
        unsafe { wf_halfline_dim(ptr::null(), &mut dim) },
        WfStatus::NullPointer
    );
}

#[test]
fn basic_loop_flow_through_the_abi() {
    for alg in [WfAlgorithm::Crossings, WfAlgorithm::ExpWinding] {
        let mut flow = 0;
        let s = unsafe { wf_basic_loop_flow(1.0, 0.3, 600, 0.05, 48, 0.9, alg as i32, &mut flow) };
        assert_eq!(s, WfStatus::Ok, "{}", last_error());
        assert_eq!(flow, -1);
    }
    let mut flow = 0;
    assert_eq!(
        unsafe { wf_basic_loop_flow(1.0, 0.3, 600, 0.05, 48, 0.9, 7, &mut flow) },
        WfStatus::InvalidInput
    );
}

#[test]
fn continuum_field_through_the_abi() {
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { wf_continuum_field_create(-1.0, 0.0, 1.0, 0.0, &mut f) },
        WfStatus::Ok
    );
    let (mut re, mut im) = (1.0, 1.0);
    assert_eq!(
        unsafe { wf_continuum_field_eval(f, -1.0, 0.0, &mut re, &mut im) },
        WfStatus::Ok
    );
    assert_eq!((re, im), (0.0, 0.0));
    let (mut p, mut m) = (0, 0);
    assert_eq!(
        unsafe { wf_continuum_local_indices(f, &mut p, &mut m) },
        WfStatus::Ok
    );
    assert_eq!((p, m), (1, -1));
    let mut flow = 0;
    assert_eq!(
        unsafe { wf_continuum_circle_flow(f, -1.0, 0.0, 0.5, 64, &mut flow) },
        WfStatus::Ok
    );
    assert_eq!(flow, -1);
    assert_eq!(
        unsafe { wf_continuum_circle_flow(f, 0.0, 0.0, 3.0, 64, &mut flow) },
        WfStatus::Ok
    );
    assert_eq!(flow, 0);
    assert_eq!(
        unsafe { wf_continuum_circle_flow(f, 0.0, 0.0, -1.0, 64, &mut flow) },
        WfStatus::InvalidInput
    );
    unsafe { wf_continuum_field_free(f) };
    assert_eq!(
        unsafe { wf_continuum_field_create(1.0, 0.0, 1.0, 0.0, &mut f) },
        WfStatus::InvalidInput
    );
}

#[test]
fn run_config_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\n[[scenario]]\nname = \"flux\"\nkind = \"chern_half\"\n[scenario.params]\ndensity = 120\ntolerance = 0.05\n",
    )
    .unwrap();
    let path = CString::new(cfg.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { wf_run_config(path.as_ptr(), out.as_ptr(), 1, &mut r) },
        WfStatus::Ok,
        "{}",
        last_error()
    );
    let (mut passed, mut failed) = (0, 0);
    assert_eq!(
        unsafe { wf_report_counts(r, &mut passed, &mut failed) },
        WfStatus::Ok
    );
    assert_eq!((passed, failed), (1, 0));
    let mut buf = [0 as std::ffi::c_char; 8];
    let mut needed = 0;
    assert_eq!(
        unsafe { wf_report_check_line(r, 0, buf.as_mut_ptr(), buf.len(), &mut needed) },
        WfStatus::BufferTooSmall
    );
    let mut line = vec![0 as std::ffi::c_char; needed];
    assert_eq!(
        unsafe { wf_report_check_line(r, 0, line.as_mut_ptr(), line.len(), &mut needed) },
        WfStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(line.as_ptr()) }.to_str().unwrap();
    assert!(text.starts_with("PASS chern_half"), "{text}");
    assert_eq!(
        unsafe { wf_report_check_line(r, 5, line.as_mut_ptr(), line.len(), &mut needed) },
        WfStatus::InvalidInput
    );
    unsafe { wf_report_free(r) };

    let missing = CString::new("/nonexistent.toml").unwrap();
    assert_eq!(
        unsafe { wf_run_config(missing.as_ptr(), ptr::null(), 0, &mut r) },
        WfStatus::Config
    );
    assert_eq!(
        unsafe { wf_run_config(ptr::null(), ptr::null(), 0, &mut r) },
        WfStatus::NullPointer
    );
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(wf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_declares_every_entry_point() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/weylflow.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "wf_bound_state",
        "wf_halfline_create",
        "wf_basic_loop_flow",
        "wf_run_config",
        "wf_last_error_message",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, concat!(
            "#include \"weylflow.h\"\n",
            "int main(void) {\n",
            "  void (*release)(WfHalfLine *) = wf_halfline_free;\n",
            "  enum WfStatus (*flow)(double, double, size_t, double, size_t, double, int32_t, int64_t *) = wf_basic_loop_flow;\n",
            "  (void)release; (void)flow;\n",
            "  return WF_STATUS_OK + WF_ALGORITHM_CROSSINGS;\n",
            "}\n"
        ))
        .unwrap();
    match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("no C compiler, header syntax not checked: {e}"),
    }
}
