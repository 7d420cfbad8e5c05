use std::ffi::{CStr, CString};
use std::ptr;

use lipmm_ffi::*;

fn last_error() -> String {
    let p = lipmm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn grid_space(side: usize) -> *mut LipmmSpace {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lipmm_space_grid(2, side, false, &mut s) }, LipmmStatus::Ok);
    s
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(lipmm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn space_handles() {
    let s = grid_space(4);
    unsafe {
        assert_eq!(lipmm_space_len(s), 16);
        let mut d = 0.0;
        assert_eq!(lipmm_space_dist(s, 0, 15, &mut d), LipmmStatus::Ok);
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(lipmm_space_dist(s, 0, 16, &mut d), LipmmStatus::BadInput);
        assert!(last_error().contains("out of range"));
        assert_eq!(lipmm_space_dist(s, 0, 1, ptr::null_mut()), LipmmStatus::NullPointer);
        lipmm_space_free(s);
        assert_eq!(lipmm_space_len(ptr::null()), 0);
        lipmm_space_free(ptr::null_mut());

        let mut c = ptr::null_mut();
        assert_eq!(lipmm_space_cantor(2, &mut c), LipmmStatus::Ok);
        assert_eq!(lipmm_space_len(c), 8);
        lipmm_space_free(c);
    }
}

#[test]
fn space_from_json_and_bad_json() {
    let json = CString::new(r#"{"points":[{"id":"a","coords":[0.0]},{"id":"b","coords":[0.5]}],"metric":"euclidean"}"#).unwrap();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(lipmm_space_from_json(json.as_ptr(), 1e-9, &mut s), LipmmStatus::Ok, "{}", last_error());
        let mut d = 0.0;
        lipmm_space_dist(s, 0, 1, &mut d);
        assert_eq!(d, 0.5);
        lipmm_space_free(s);

        let bad = CString::new("{not json").unwrap();
        assert_eq!(lipmm_space_from_json(bad.as_ptr(), 1e-9, &mut s), LipmmStatus::BadInput);
        assert!(!last_error().is_empty());
        assert_eq!(lipmm_space_from_json(ptr::null(), 1e-9, &mut s), LipmmStatus::NullPointer);
    }
}

#[test]
fn grid_lines_validate_and_differentiate() {
    let side = 5;
    let s = grid_space(side);
    let mut rep = ptr::null_mut();
    unsafe {
        assert_eq!(lipmm_rep_grid_lines(s, side, 0, &mut rep), LipmmStatus::Ok, "{}", last_error());
        let mut res = f64::NAN;
        assert_eq!(lipmm_rep_validate(s, rep, 1e-9, &mut res), LipmmStatus::Ok);
        assert!(res < 1e-9);

        // f = first coordinate; lines along axis 0 move at unit speed in it.
        let n = side * side;
        let f: Vec<f64> = (0..n).map(|i| (i / side) as f64 / (side - 1) as f64).collect();
        let mut df = vec![0.0; n];
        let mut sigma = vec![0.0; n];
        assert_eq!(lipmm_derivation(s, rep, f.as_ptr(), n, df.as_mut_ptr(), sigma.as_mut_ptr()), LipmmStatus::Ok, "{}", last_error());
        for i in 0..n {
            assert!((df[i].abs() - 1.0).abs() < 1e-9, "df[{i}] = {}", df[i]);
            assert!((sigma[i] - 1.0).abs() < 1e-9);
        }
        assert_eq!(lipmm_derivation(s, rep, f.as_ptr(), n - 1, df.as_mut_ptr(), sigma.as_mut_ptr()), LipmmStatus::BadInput);

        let mut big = 0.0;
        assert_eq!(lipmm_biglip_at(s, f.as_ptr(), n, 12, 0.3, &mut big), LipmmStatus::Ok);
        assert!((big - 1.0).abs() < 1e-12);
        let mut ratios = vec![0.0; n];
        assert_eq!(lipmm_liplip_ratios(s, f.as_ptr(), n, 0.0, ratios.as_mut_ptr()), LipmmStatus::Ok, "{}", last_error());
        assert!(ratios.iter().all(|r| r.is_finite() && *r >= 1.0 - 1e-12));

        lipmm_rep_free(rep);
        assert_eq!(lipmm_rep_grid_lines(s, side + 1, 0, &mut rep), LipmmStatus::BadInput);
        lipmm_space_free(s);
    }
}

#[test]
fn rep_json_is_checked() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(lipmm_space_segment(3, &mut s), LipmmStatus::Ok);
        let ok = CString::new(r#"{"fragments":[{"domain":[0.0,0.5,1.0],"trace":["s0","s1","s2"]}],"probs":[1.0],"densities":[[1.0,1.0,1.0]]}"#).unwrap();
        let mut rep = ptr::null_mut();
        let status = lipmm_rep_from_json(s, ok.as_ptr(), &mut rep);
        assert_eq!(status, LipmmStatus::Ok, "{}", last_error());
        lipmm_rep_free(rep);

        let bad = CString::new(r#"{"fragments":[{"domain":[0.0,0.5],"trace":["s0","s1"]},{"domain":[0.0,0.5],"trace":["s1","s2"]}],"probs":[0.5,0.2],"densities":[[1.0,1.0],[1.0,1.0]]}"#).unwrap();
        let status = lipmm_rep_from_json(s, bad.as_ptr(), &mut rep);
        assert_eq!(status, LipmmStatus::BadInput);
        assert!(last_error().contains("probabilities"));
        lipmm_space_free(s);
    }
}

#[test]
fn zahorski_summary() {
    let (d, l, a) = (CString::new("1/2").unwrap(), CString::new("1").unwrap(), CString::new("1/20").unwrap());
    let mut out = LipmmIndependence::default();
    let status = unsafe { lipmm_zahorski_build(d.as_ptr(), l.as_ptr(), a.as_ptr(), 2, 4, 1e-9, &mut out) };
    assert_eq!(status, LipmmStatus::Ok, "{}", last_error());
    assert!(out.certified);
    assert!(out.max_lipschitz <= out.lipschitz_bound);
    assert!(out.min_variation >= out.variation_bound - 1e-9);
    assert!(out.min_window_ratio > 1.0);
    assert!(out.kept_points > 0 && out.kept_points <= out.sample_points);

    let big = CString::new("0.9").unwrap();
    let status = unsafe { lipmm_zahorski_build(big.as_ptr(), l.as_ptr(), a.as_ptr(), 2, 4, 1e-9, &mut out) };
    assert_eq!(status, LipmmStatus::BadInput);
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/lipmm.h")).unwrap();
    for name in [
        "LIPMM_H",
        "typedef struct LipmmSpace LipmmSpace",
        "typedef struct LipmmRep LipmmRep",
        "LIPMM_STATUS_INVARIANT = 3",
        "lipmm_last_error",
        "lipmm_version",
        "lipmm_space_from_json",
        "lipmm_space_grid",
        "lipmm_space_cantor",
        "lipmm_space_free",
        "lipmm_rep_grid_lines",
        "lipmm_rep_validate",
        "lipmm_derivation",
        "lipmm_biglip_at",
        "lipmm_liplip_ratios",
        "lipmm_zahorski_build",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
