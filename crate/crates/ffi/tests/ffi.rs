use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use convexseg_ffi::*;

fn disk_values(n: usize, r: f64) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    (0..n * n)
        .map(|k| ((k % n) as f64 - c).hypot((k / n) as f64 - c) - r)
        .collect()
}

unsafe fn new_field(w: usize, h: usize, v: &[f64]) -> *mut CsField {
    let mut f = ptr::null_mut();
    assert_eq!(cs_field_new(w, h, v.as_ptr(), &mut f), CsStatus::Ok);
    f
}

unsafe fn last_error() -> String {
    let p = cs_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn field_round_trip() {
    let v: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
    unsafe {
        let f = new_field(4, 3, &v);
        assert_eq!(cs_field_width(f), 4);
        assert_eq!(cs_field_height(f), 3);
        let mut out = vec![0.0; 12];
        assert_eq!(cs_field_copy_values(f, out.as_mut_ptr(), 12), CsStatus::Ok);
        assert_eq!(out, v);
        assert_eq!(cs_field_copy_values(f, out.as_mut_ptr(), 11), CsStatus::InvalidInput);
        assert!(last_error().contains("11"));
        cs_field_free(f);
    }
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(cs_laplacian(ptr::null(), &mut out), CsStatus::NullPointer);
        assert!(out.is_null());
        assert_eq!(cs_field_new(2, 2, ptr::null(), &mut out), CsStatus::NullPointer);
        assert_eq!(cs_field_width(ptr::null()), 0);
        cs_field_free(ptr::null_mut());
        cs_segmentation_free(ptr::null_mut());
    }
}

#[test]
fn bad_dimensions_fail_cleanly() {
    let v = [0.0; 4];
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(cs_field_new(0, 4, v.as_ptr(), &mut out), CsStatus::InvalidInput);
        assert!(out.is_null());
    }
}

#[test]
fn laplacian_of_quadratic() {
    let n = 6;
    let v: Vec<f64> = (0..n * n).map(|k| ((k % n) * (k % n)) as f64).collect();
    unsafe {
        let f = new_field(n, n, &v);
        let mut lap = ptr::null_mut();
        assert_eq!(cs_laplacian(f, &mut lap), CsStatus::Ok);
        let mut out = vec![0.0; n * n];
        cs_field_copy_values(lap, out.as_mut_ptr(), n * n);
        for r in 1..n - 1 {
            for c in 1..n - 1 {
                assert_eq!(out[r * n + c], 2.0);
            }
        }
        cs_field_free(lap);
        cs_field_free(f);
    }
}

#[test]
fn reinitialize_and_prior_on_disk() {
    let n = 48;
    let scaled: Vec<f64> = disk_values(n, 12.0).iter().map(|v| 2.0 * v).collect();
    unsafe {
        let f = new_field(n, n, &scaled);
        let mut sdf = ptr::null_mut();
        assert_eq!(cs_reinitialize(f, &mut sdf), CsStatus::Ok);
        let mut out = vec![0.0; n * n];
        cs_field_copy_values(sdf, out.as_mut_ptr(), n * n);
        let exact = disk_values(n, 12.0);
        let worst = out.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 0.3, "{worst}");

        let mut convex = ptr::null_mut();
        let mut outer = 0usize;
        assert_eq!(
            cs_enforce_convex_prior(sdf, 1e-4, 300, 30, &mut convex, &mut outer),
            CsStatus::Ok
        );
        assert!(outer >= 1);
        let mut is_convex = false;
        assert_eq!(cs_is_convex_region(convex, 1.0, &mut is_convex), CsStatus::Ok);
        assert!(is_convex);

        let mut proj = ptr::null_mut();
        let mut its = 0usize;
        assert_eq!(cs_project_convex(sdf, 30, 1e-12, &mut proj, &mut its), CsStatus::Ok);
        assert!((1..=30).contains(&its));
        for p in [f, sdf, convex, proj] {
            cs_field_free(p);
        }
    }
}

#[test]
fn errors_map_to_status_codes() {
    let n = 16;
    let flat = vec![3.0; n * n];
    unsafe {
        let f = new_field(n, n, &flat);
        let mut out = ptr::null_mut();
        assert_eq!(cs_reinitialize(f, &mut out), CsStatus::RegionCollapse);
        assert_eq!(
            cs_enforce_convex_prior(f, 1e-4, 10, 30, &mut out, ptr::null_mut()),
            CsStatus::RegionCollapse
        );
        assert_eq!(
            cs_project_convex(f, 0, 1e-12, &mut out, ptr::null_mut()),
            CsStatus::InvalidParameter
        );
        assert_eq!(
            cs_project_convex(f, 5, -1.0, &mut out, ptr::null_mut()),
            CsStatus::InvalidParameter
        );
        let mut convex = false;
        assert_eq!(cs_is_convex_region(f, 1.0, &mut convex), CsStatus::InvalidInput);
        assert!(!last_error().is_empty());
        cs_field_free(f);
    }
}

#[test]
fn segment_square() {
    let n = 64;
    let image: Vec<f64> = (0..n * n)
        .map(|k| {
            let (r, c) = (k / n, k % n);
            if (18..46).contains(&r) && (18..46).contains(&c) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    unsafe {
        let img = new_field(n, n, &image);
        let mut cfg = cs_segment_config_default(CsModel::ChanVese);
        assert_eq!(cfg.mu, 10.0);
        assert_eq!(cfg.lambda1, 1.0);
        // a 28 px square is too small to pay for its boundary at mu = 10
        cfg.mu = 1.0;
        cfg.convex_prior = true;
        cfg.init_kind = CsInitKind::Circle;
        cfg.init = [31.5, 31.5, 13.0, 0.0];
        let mut seg = ptr::null_mut();
        assert_eq!(
            cs_segment(img, &cfg, ptr::null(), &mut seg),
            CsStatus::Ok,
            "{}",
            last_error()
        );
        assert!(cs_segmentation_outer_iterations(seg) >= 1);

        let mut region = vec![0u8; n * n];
        assert_eq!(cs_segmentation_region(seg, region.as_mut_ptr(), n * n), CsStatus::Ok);
        let agree = region
            .iter()
            .zip(&image)
            .filter(|(&m, &v)| (m == 1) == (v == 1.0))
            .count();
        assert!(agree as f64 / (n * n) as f64 > 0.97, "{agree}");

        let (mut c1, mut c2) = (0.0, 0.0);
        assert_eq!(cs_segmentation_means(seg, &mut c1, &mut c2), CsStatus::Ok);
        assert!(c1 < 0.1 && c2 > 0.7, "{c1} {c2}");

        let len = cs_segmentation_trace_len(seg);
        assert_eq!(len, cs_segmentation_outer_iterations(seg));
        let mut energy = vec![0.0; len];
        assert_eq!(cs_segmentation_energy(seg, energy.as_mut_ptr(), len), CsStatus::Ok);
        assert!(energy.iter().all(|e| e.is_finite()));

        let mut phi = ptr::null_mut();
        assert_eq!(cs_segmentation_phi(seg, &mut phi), CsStatus::Ok);
        assert_eq!(cs_field_width(phi), n);
        cs_field_free(phi);
        cs_segmentation_free(seg);

        let mut edge = cs_segment_config_default(CsModel::EdgeOnly);
        edge.lambda1 = 1.0;
        edge.init = [31.5, 31.5, 10.0, 0.0];
        assert_eq!(
            cs_segment(img, &edge, ptr::null(), &mut seg),
            CsStatus::InvalidParameter
        );
        cs_field_free(img);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(cs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/convexseg.h")).unwrap();
    for name in [
        "cs_version",
        "cs_last_error_message",
        "cs_field_new",
        "cs_field_free",
        "cs_field_copy_values",
        "cs_laplacian",
        "cs_reinitialize",
        "cs_project_convex",
        "cs_enforce_convex_prior",
        "cs_is_convex_region",
        "cs_segment_config_default",
        "cs_segment",
        "cs_segmentation_free",
        "cs_segmentation_region",
        "cs_segmentation_means",
        "typedef struct CsField CsField",
        "CS_STATUS_NULL_POINTER = 7",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compile and run a small C program against the generated header and the
/// static library produced for this test run.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libconvexseg_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "convexseg.h"
int main(void) {
    double v[64];
    for (int i = 0; i < 64; i++) {
        int r = i / 8, c = i % 8;
        v[i] = (r - 3.5) * (r - 3.5) + (c - 3.5) * (c - 3.5) - 6.0;
    }
    CsField *f = NULL, *sdf = NULL;
    if (cs_field_new(8, 8, v, &f) != CS_STATUS_OK) return 1;
    if (cs_reinitialize(f, &sdf) != CS_STATUS_OK) return 2;
    bool convex = false;
    if (cs_is_convex_region(sdf, 1.0, &convex) != CS_STATUS_OK || !convex) return 3;
    if (cs_laplacian(NULL, &f) != CS_STATUS_NULL_POINTER) return 4;
    if (cs_last_error_message() == NULL) return 5;
    printf("%s %zu\n", cs_version(), cs_field_width(sdf));
    cs_field_free(sdf);
    cs_field_free(f);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        format!("{} 8", env!("CARGO_PKG_VERSION"))
    );
}
