use atd_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(atd_last_error_message()) }.to_string_lossy().into_owned()
}

fn matrix(labels: &[&str], values: &[f64]) -> *mut AtdMatrix {
    let owned: Vec<CString> = labels.iter().map(|l| CString::new(*l).unwrap()).collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|c| c.as_ptr()).collect();
    let mut m = ptr::null_mut();
    let s = unsafe { atd_matrix_new(ptrs.as_ptr(), labels.len(), values.as_ptr(), &mut m) };
    assert_eq!(s, AtdStatus::Ok, "{}", last_error());
    m
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    atd_string_free(p);
    s
}

#[test]
fn distances_match_core() {
    let p = [0.2, 0.5, 0.3, 0.0];
    let q = [0.0, 0.1, 0.4, 0.5];
    let mut w = 0.0;
    let mut c = 0.0;
    unsafe {
        assert_eq!(atd_w2_exact(p.as_ptr(), q.as_ptr(), 4, &mut w), AtdStatus::Ok);
        assert_eq!(atd_cramer_l2(p.as_ptr(), q.as_ptr(), 4, &mut c), AtdStatus::Ok);
    }
    assert_eq!(w, atd_core::transport::w2_exact(&p, &q).unwrap());
    assert_eq!(c, atd_core::transport::cramer_l2(&p, &q).unwrap());

    let cfg = atd_sinkhorn_default_config();
    let (mut s, mut conv) = (f64::NAN, false);
    let status = unsafe { atd_sinkhorn_divergence(p.as_ptr(), p.as_ptr(), 4, &cfg, &mut s, &mut conv) };
    assert_eq!(status, AtdStatus::Ok);
    assert!(s.abs() <= 1e-9 && conv);
}

#[test]
fn bad_input_sets_status_and_message() {
    let p = [0.5, 0.5];
    let q = [0.5, 0.6];
    let mut w = 0.0;
    unsafe {
        assert_eq!(atd_w2_exact(p.as_ptr(), q.as_ptr(), 2, &mut w), AtdStatus::InvalidInput);
        assert!(!last_error().is_empty());
        assert_eq!(atd_w2_exact(ptr::null(), q.as_ptr(), 2, &mut w), AtdStatus::NullPointer);
        assert_eq!(atd_w2_exact(p.as_ptr(), p.as_ptr(), 2, ptr::null_mut()), AtdStatus::NullPointer);
        assert_eq!(atd_w2_exact(p.as_ptr(), p.as_ptr(), 2, &mut w), AtdStatus::Ok);
    }
    assert!(last_error().is_empty());

    let mut cfg = atd_sinkhorn_default_config();
    cfg.blur = -1.0;
    let mut s = 0.0;
    let status = unsafe { atd_sinkhorn_divergence(p.as_ptr(), p.as_ptr(), 2, &cfg, &mut s, ptr::null_mut()) };
    assert_eq!(status, AtdStatus::InvalidInput);
    assert!(last_error().contains("blur"));
}

#[test]
fn matrix_tree_round_trip() {
    let m = matrix(&["a", "b", "c", "d"], &[
        0.0, 3.0, 6.0, 7.0, //
        3.0, 0.0, 7.0, 8.0, //
        6.0, 7.0, 0.0, 5.0, //
        7.0, 8.0, 5.0, 0.0,
    ]);
    unsafe {
        assert_eq!(atd_matrix_size(m), 4);
        let mut v = 0.0;
        assert_eq!(atd_matrix_get(m, 1, 3, &mut v), AtdStatus::Ok);
        assert_eq!(v, 8.0);
        assert_eq!(atd_matrix_get(m, 4, 0, &mut v), AtdStatus::OutOfRange);
        let mut label = ptr::null_mut();
        assert_eq!(atd_matrix_label(m, 2, &mut label), AtdStatus::Ok);
        assert_eq!(take_string(label), "c");

        let mut t = ptr::null_mut();
        assert_eq!(atd_nj_build(m, &mut t), AtdStatus::Ok);
        assert_eq!(atd_tree_leaf_count(t), 4);
        let (mut r, mut rho) = (0.0, 0.0);
        assert_eq!(atd_cophenetic(m, t, &mut r, &mut rho), AtdStatus::Ok);
        assert!((r - 1.0).abs() < 1e-12 && (rho - 1.0).abs() < 1e-12);

        let mut nwk = ptr::null_mut();
        assert_eq!(atd_tree_to_newick(t, &mut nwk), AtdStatus::Ok);
        let text = CString::new(take_string(nwk)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(atd_tree_from_newick(text.as_ptr(), &mut back), AtdStatus::Ok);
        assert_eq!(atd_tree_leaf_count(back), 4);
        atd_tree_free(back);
        atd_tree_free(t);
        atd_matrix_free(m);
        atd_matrix_free(ptr::null_mut());
        atd_tree_free(ptr::null_mut());
    }
}

#[test]
fn asymmetric_matrix_rejected() {
    let labels = [CString::new("a").unwrap(), CString::new("b").unwrap()];
    let ptrs = [labels[0].as_ptr(), labels[1].as_ptr()];
    let mut m = ptr::null_mut();
    let s = unsafe { atd_matrix_new(ptrs.as_ptr(), 2, [0.0, 1.0, 2.0, 0.0].as_ptr(), &mut m) };
    assert_eq!(s, AtdStatus::InvalidInput);
    assert!(m.is_null());
    let mut t = ptr::null_mut();
    let bad = CString::new("(a:1,b:").unwrap();
    assert_eq!(unsafe { atd_tree_from_newick(bad.as_ptr(), &mut t) }, AtdStatus::Parse);
}

#[test]
fn mann_whitney_through_abi() {
    let a = [1.0, 2.0];
    let b = [3.0, 4.0];
    let (mut u, mut p, mut exact) = (f64::NAN, f64::NAN, false);
    let s = unsafe { atd_mann_whitney_u(a.as_ptr(), 2, b.as_ptr(), 2, AtdSided::Two, &mut u, &mut p, &mut exact) };
    assert_eq!(s, AtdStatus::Ok);
    assert_eq!(u, 0.0);
    assert!((p - 1.0 / 3.0).abs() < 1e-15 && exact);
    let s = unsafe { atd_mann_whitney_u(a.as_ptr(), 0, b.as_ptr(), 2, AtdSided::Less, &mut u, &mut p, ptr::null_mut()) };
    assert_eq!(s, AtdStatus::InvalidInput);
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(atd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compile the C smoke program against the generated header and the static
/// library. Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_against_header() {
    let crate_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/atd.h");
    assert!(header.exists(), "header not generated");
    let exe_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = exe_dir.join("libatd_ffi.a");
    if !lib.exists() {
        eprintln!("static library not found at {}; skipping", lib.display());
        return;
    }
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = std::process::Command::new(&cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status();
    let Ok(status) = status else {
        eprintln!("no C compiler ({cc}); skipping");
        return;
    };
    assert!(status.success(), "C compile failed");
    let run = std::process::Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("ok"));
}
