use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use privregion_ffi::*;

fn last_error() -> String {
    let n = pr_last_error_length();
    let mut buf = vec![0 as c_char; n.max(1)];
    assert_eq!(
        unsafe { pr_last_error_message(buf.as_mut_ptr(), buf.len()) },
        PrStatus::Ok
    );
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn census_gamma_round_trip() {
    let p = [0.5, 0.25, 0.25];
    let mut prob = ptr::null_mut();
    assert_eq!(
        unsafe { pr_problem_census(p.as_ptr(), 3, 3, &mut prob) },
        PrStatus::Ok
    );
    let mut pt = ptr::null_mut();
    assert_eq!(unsafe { pr_gamma(prob, 0.2, 0, &mut pt) }, PrStatus::Ok);
    let (mut r, mut d, mut e) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { pr_point_metrics(pt, &mut r, &mut d, &mut e) },
        PrStatus::Ok
    );
    assert!((e - 0.921928).abs() < 1e-4);
    assert!(d <= 0.2 + 1e-9);

    let (mut ni, mut no) = (0, 0);
    assert_eq!(
        unsafe { pr_point_channel(pt, ptr::null_mut(), 0, &mut ni, &mut no) },
        PrStatus::Ok
    );
    assert_eq!((ni, no), (3, 3));
    let mut small = [0.0; 4];
    assert_eq!(
        unsafe { pr_point_channel(pt, small.as_mut_ptr(), 4, ptr::null_mut(), ptr::null_mut()) },
        PrStatus::BufferTooSmall
    );
    let mut m = [0.0; 9];
    assert_eq!(
        unsafe { pr_point_channel(pt, m.as_mut_ptr(), 9, ptr::null_mut(), ptr::null_mut()) },
        PrStatus::Ok
    );
    for row in m.chunks(3) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    unsafe {
        pr_point_free(pt);
        pr_problem_free(prob);
    }
}

#[test]
fn infeasible_rate_reports_code_and_message() {
    let p = [0.5, 0.5];
    let mut prob = ptr::null_mut();
    assert_eq!(
        unsafe { pr_problem_census(p.as_ptr(), 2, 0, &mut prob) },
        PrStatus::Ok
    );
    let mut pt = ptr::null_mut();
    assert_eq!(
        unsafe { pr_rate(prob, 0.1, 0.9, 0, &mut pt) },
        PrStatus::Infeasible
    );
    assert!(pt.is_null());
    assert!(last_error().contains("exceeds the frontier"));
    // success clears the message
    assert_eq!(unsafe { pr_rate(prob, 0.1, 0.2, 0, &mut pt) }, PrStatus::Ok);
    assert_eq!(pr_last_error_length(), 0);
    let mut r = 0.0;
    unsafe { pr_point_metrics(pt, &mut r, ptr::null_mut(), ptr::null_mut()) };
    assert!((r - (1.0 - h2(0.1))).abs() < 1e-3);
    unsafe {
        pr_point_free(pt);
        pr_problem_free(prob);
    }
}

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[test]
fn problem_from_json() {
    let json = CString::new(
        r#"{"joint": {"axes": [{"name": "h", "role": "private", "labels": ["0", "1"]},
                               {"name": "r", "role": "public", "labels": ["0", "1"]}],
                      "probs": [0.4, 0.1, 0.15, 0.35]},
            "distortion": "hamming", "u_cardinality": 2}"#,
    )
    .unwrap();
    let mut prob = ptr::null_mut();
    assert_eq!(
        unsafe { pr_problem_from_json(json.as_ptr(), &mut prob) },
        PrStatus::Ok
    );
    let mut pt = ptr::null_mut();
    assert_eq!(unsafe { pr_gamma(prob, 0.5, 0, &mut pt) }, PrStatus::Ok);
    let mut e = 0.0;
    unsafe { pr_point_metrics(pt, ptr::null_mut(), ptr::null_mut(), &mut e) };
    // D at or above d_max: nothing need be revealed
    assert!((e - h2(0.5)).abs() < 1e-9);
    unsafe {
        pr_point_free(pt);
        pr_problem_free(prob);
    }

    let bad = CString::new("{\"joint\": 3}").unwrap();
    assert_eq!(
        unsafe { pr_problem_from_json(bad.as_ptr(), &mut prob) },
        PrStatus::InvalidArgument
    );
}

#[test]
fn closed_forms_and_noise() {
    let p = [0.5, 0.25, 0.25];
    let (mut lambda, mut gamma, mut rate) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { pr_waterfill(p.as_ptr(), 3, 0.2, &mut lambda, &mut gamma, &mut rate) },
        PrStatus::Ok
    );
    assert!((lambda - 0.1).abs() < 1e-12);
    let mut ba = 0.0;
    assert_eq!(
        unsafe { pr_rd_hamming(p.as_ptr(), 3, 0.2, &mut ba) },
        PrStatus::Ok
    );
    assert!((ba - rate).abs() < 1e-4);

    let v = [1.0, 2.0, 3.0];
    let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
    assert_eq!(
        unsafe { pr_laplace(v.as_ptr(), 3, 1.0, 1.0, 7, a.as_mut_ptr()) },
        PrStatus::Ok
    );
    assert_eq!(
        unsafe { pr_laplace(v.as_ptr(), 3, 1.0, 1.0, 7, b.as_mut_ptr()) },
        PrStatus::Ok
    );
    assert_eq!(a, b);
    assert_ne!(a, v);
    assert_eq!(
        unsafe { pr_laplace(v.as_ptr(), 3, 0.0, 1.0, 7, a.as_mut_ptr()) },
        PrStatus::InvalidArgument
    );
}

#[test]
fn null_pointers_are_rejected() {
    let mut prob = ptr::null_mut();
    assert_eq!(
        unsafe { pr_problem_census(ptr::null(), 3, 0, &mut prob) },
        PrStatus::NullPointer
    );
    assert!(last_error().contains("probs"));
    let mut pt = ptr::null_mut();
    assert_eq!(
        unsafe { pr_gamma(ptr::null(), 0.1, 0, &mut pt) },
        PrStatus::NullPointer
    );
    assert_eq!(
        unsafe { pr_last_error_message(ptr::null_mut(), 4) },
        PrStatus::NullPointer
    );
    let mut tiny = [0 as c_char; 2];
    assert_eq!(
        unsafe { pr_last_error_message(tiny.as_mut_ptr(), 2) },
        PrStatus::BufferTooSmall
    );
    unsafe {
        pr_problem_free(ptr::null_mut());
        pr_point_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/privregion.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ PrProblem *p = 0; PrStatus s = pr_problem_census(0, 0, 0, &p); return s == PR_STATUS_NULL_POINTER ? 0 : 1; }}\n"
        ),
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&src)
            .output()
        else {
            eprintln!("{compiler} not found; skipping");
            continue;
        };
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
