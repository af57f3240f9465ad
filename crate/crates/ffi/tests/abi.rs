use std::ffi::{CStr, CString};
use std::ptr;

use resgap_ffi::*;

const SINGLE: &str = r#"{"n":2,"resonators":[{"h":1.0,"eta":1.0,"d_profile_measure":1.0,"b_volume":1.0}],"b0_volume":1.0}"#;

fn last_error() -> String {
    let p = resgap_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn model_to_report() {
    let text = CString::new(SINGLE).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(resgap_model_from_json(text.as_ptr(), &mut model), ResgapStatus::Ok);
        let mut f = f64::NAN;
        assert_eq!(resgap_model_evaluate_f(model, 0.0, &mut f), ResgapStatus::Ok);
        assert!((f - 2.0).abs() < 1e-15);
        assert_eq!(resgap_model_evaluate_f(model, 1.0, &mut f), ResgapStatus::InvalidInput);

        let mut report = ptr::null_mut();
        assert_eq!(resgap_compute_betas(model, &mut report), ResgapStatus::Ok);
        assert_eq!(resgap_report_len(report), 1);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(resgap_report_endpoints(report, &mut a, &mut b, 1), ResgapStatus::Ok);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-10);
        assert_eq!(resgap_report_endpoints(report, &mut a, &mut b, 0), ResgapStatus::BufferTooSmall);

        let mut json = ptr::null_mut();
        assert_eq!(resgap_report_to_json(report, &mut json), ResgapStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("betas"));
        resgap_string_free(json);
        resgap_report_free(report);
        resgap_model_free(model);
    }
}

#[test]
fn malformed_json_reports_invalid_input() {
    let text = CString::new("{\"n\": 2").unwrap();
    let mut model = ptr::null_mut();
    let status = unsafe { resgap_model_from_json(text.as_ptr(), &mut model) };
    assert_eq!(status, ResgapStatus::InvalidInput);
    assert!(model.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { resgap_model_from_json(ptr::null(), &mut model) }, ResgapStatus::NullPointer);
    assert!(last_error().contains("null"));
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { resgap_compute_betas(ptr::null(), &mut report) }, ResgapStatus::NullPointer);
    assert_eq!(unsafe { resgap_report_len(ptr::null()) }, 0);
}

#[test]
fn design_and_roundtrip() {
    let alphas = [1.0, 3.0];
    let betas = [2.0, 4.0];
    let mut geometry = ptr::null_mut();
    unsafe {
        assert_eq!(resgap_design(alphas.as_ptr(), betas.as_ptr(), 2, 0.5, &mut geometry), ResgapStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(
            resgap_geometry_roundtrip(geometry, alphas.as_ptr(), betas.as_ptr(), 2, &mut report),
            ResgapStatus::Ok
        );
        assert_eq!(resgap_report_len(report), 2);
        resgap_report_free(report);

        let other = [2.0, 4.5];
        let mut report = ptr::null_mut();
        assert_eq!(
            resgap_geometry_roundtrip(geometry, alphas.as_ptr(), other.as_ptr(), 2, &mut report),
            ResgapStatus::VerificationFailed
        );
        assert!(!report.is_null());
        resgap_report_free(report);

        let mut json = ptr::null_mut();
        assert_eq!(resgap_geometry_to_json(geometry, &mut json), ResgapStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(resgap_geometry_from_json(json, &mut back), ResgapStatus::Ok);
        resgap_string_free(json);
        resgap_geometry_free(back);
        resgap_geometry_free(geometry);
    }
}

#[test]
fn design_rejects_bad_targets() {
    let alphas = [1.0, 1.5];
    let betas = [2.0, 4.0];
    let mut geometry = ptr::null_mut();
    let status = unsafe { resgap_design(alphas.as_ptr(), betas.as_ptr(), 2, 0.5, &mut geometry) };
    assert_eq!(status, ResgapStatus::InvalidInput);
    let status = unsafe { resgap_design([1.0].as_ptr(), [2.0].as_ptr(), 1, 1.5, &mut geometry) };
    assert_ne!(status, ResgapStatus::Ok);
}

#[test]
fn empty_cell_has_no_gaps() {
    let text = CString::new(r#"{"rects_F":[],"rects_B":[],"passages":[],"b0_area":1.0}"#).unwrap();
    let mut geometry = ptr::null_mut();
    unsafe {
        assert_eq!(resgap_geometry_from_json(text.as_ptr(), &mut geometry), ResgapStatus::Ok);
        let mut count = usize::MAX;
        let status = resgap_band_gaps(geometry, 1.0, 24, 3, 4, ptr::null_mut(), ptr::null_mut(), 0, &mut count);
        assert_eq!(status, ResgapStatus::Ok, "{}", last_error());
        assert_eq!(count, 0);
        resgap_geometry_free(geometry);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/resgap.h")).unwrap();
    for name in [
        "resgap_last_error",
        "resgap_model_from_json",
        "resgap_compute_betas",
        "resgap_design",
        "resgap_band_gaps",
        "RESGAP_STATUS_OK",
        "typedef struct ResgapModel ResgapModel",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
