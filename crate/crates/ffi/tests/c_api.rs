use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use jncc::*;

fn last_error() -> String {
    let p = jncc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn analytic_metrics() {
    let mut v = 0usize;
    unsafe {
        assert_eq!(jncc_d_max(5, 5, &mut v), JnccStatus::Ok);
        assert_eq!(v, 3);
        assert_eq!(jncc_min_set_size(3, 4, &mut v), JnccStatus::Ok);
        assert_eq!(v, 2);
        assert_eq!(jncc_d_max(4, 3, &mut v), JnccStatus::InvalidArgument);
        assert!(last_error().contains("m_s"));
        assert_eq!(jncc_d_max(3, 3, ptr::null_mut()), JnccStatus::NullPointer);
    }
    assert!((jncc_bpsk_mi(1.0) - jncc_core::bounds::bpsk_mi(1.0)).abs() < 1e-15);
    assert!(jncc_bpsk_mi(-1.0).is_nan());
}

#[test]
fn topology_and_code_handles() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(jncc_topology_cyclic(5, 5, &mut t), JnccStatus::Ok);
        let mut v = 0usize;
        assert_eq!(jncc_topology_min_inclusions(t, &mut v), JnccStatus::Ok);
        assert_eq!(v, 2);
        assert_eq!(jncc_topology_coding_matrix_order(t, &mut v), JnccStatus::Ok);
        assert_eq!(v, 3);

        let mut code = ptr::null_mut();
        assert_eq!(jncc_code_build(t, JnccVariant::Smarc as i32, 40, 20, 3, 6, 1, &mut code), JnccStatus::Ok);
        let (mut rows, mut cols, mut k, mut m) = (0, 0, 0, 0);
        assert_eq!(jncc_code_dims(code, &mut rows, &mut cols, &mut k, &mut m), JnccStatus::Ok);
        assert_eq!((rows, cols, k, m), (10 * 20 + 5 * 20, 400, 20, 5));

        let info: Vec<u8> = (0..m * k).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let mut cw = vec![0u8; cols];
        assert_eq!(jncc_code_encode(code, info.as_ptr(), info.len(), cw.as_mut_ptr(), cw.len()), JnccStatus::Ok);
        let mut ok = 0;
        assert_eq!(jncc_code_check(code, cw.as_ptr(), cw.len(), &mut ok), JnccStatus::Ok);
        assert_eq!(ok, 1);
        cw[3] ^= 1;
        jncc_code_check(code, cw.as_ptr(), cw.len(), &mut ok);
        assert_eq!(ok, 0);
        assert_eq!(
            jncc_code_encode(code, info.as_ptr(), info.len() - 1, cw.as_mut_ptr(), cw.len()),
            JnccStatus::InvalidArgument
        );
        assert_eq!(jncc_code_erasure_order(code, 3, &mut v), JnccStatus::Ok);
        assert_eq!(v, 3);

        let mut bad = ptr::null_mut();
        assert_eq!(jncc_code_build(t, 99, 40, 20, 3, 6, 1, &mut bad), JnccStatus::InvalidArgument);
        assert_eq!(jncc_code_build(t, JnccVariant::Identity as i32, 10, 5, 3, 4, 1, &mut bad), JnccStatus::Construction);
        assert!(bad.is_null());

        jncc_code_free(code);
        jncc_topology_free(t);
        jncc_code_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/jncc.h")).unwrap();
    for name in ["jncc_last_error", "jncc_d_max", "jncc_code_build", "jncc_code_encode", "typedef struct JnccCode JnccCode"] {
        assert!(header.contains(name), "{name}");
    }
}

/// Compiles and runs a small C program against the static library when a C
/// compiler is around.
#[test]
fn c_program_links_and_runs() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libjncc.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "jncc.h"
int main(void) {
    size_t d = 0;
    JnccTopology *t = NULL;
    JnccCode *c = NULL;
    if (jncc_d_max(5, 5, &d) != JNCC_STATUS_OK || d != 3) return 1;
    if (jncc_topology_cyclic(5, 5, &t) != JNCC_STATUS_OK) return 2;
    if (jncc_code_build(t, JNCC_VARIANT_GLNC_ONLY, 16, 16, 0, 0, 1, &c) != JNCC_STATUS_OK) return 3;
    if (jncc_code_erasure_order(c, 3, &d) != JNCC_STATUS_OK || d != 3) return 4;
    if (jncc_topology_cyclic(2, 2, &t) == JNCC_STATUS_OK || jncc_last_error() == NULL) return 5;
    jncc_code_free(c);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let st = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
