use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use ehg_balance_ffi::*;

fn fixture() -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/gaussian_features.csv");
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = ehgb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load() -> *mut EhgbFeatureTable {
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { ehgb_table_load(fixture().as_ptr(), &mut t) },
        EhgbStatus::Ok
    );
    t
}

#[test]
fn table_counts() {
    let t = load();
    unsafe {
        assert_eq!(ehgb_table_n_plus(t), 38);
        assert_eq!(ehgb_table_n_minus(t), 262);
        assert_eq!(ehgb_table_rows(t), 300);
        assert_eq!(ehgb_table_features(t), 4);
        let mut scores = [0.0; 4];
        assert_eq!(
            ehgb_feature_scores(t, scores.as_mut_ptr(), 4),
            EhgbStatus::Ok
        );
        assert!(scores.iter().all(|s| s.is_finite() && *s >= 0.0));
        assert_eq!(
            ehgb_feature_scores(t, scores.as_mut_ptr(), 3),
            EhgbStatus::DomainError
        );
        ehgb_table_free(t);
    }
}

#[test]
fn missing_file_reports_io_error() {
    let mut t = ptr::null_mut();
    let path = CString::new("/nonexistent/table.csv").unwrap();
    assert_eq!(
        unsafe { ehgb_table_load(path.as_ptr(), &mut t) },
        EhgbStatus::IoError
    );
    assert!(t.is_null());
    assert!(last_error().contains("/nonexistent/table.csv"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { ehgb_table_load(ptr::null(), &mut t) },
        EhgbStatus::NullPointer
    );
    assert_eq!(
        unsafe { ehgb_required_synthetic_count(1, 2, 1.0, ptr::null_mut()) },
        EhgbStatus::NullPointer
    );
    unsafe {
        assert_eq!(ehgb_table_n_plus(ptr::null()), 0);
        assert!(ehgb_curve_alpha_star(ptr::null()).is_nan());
        ehgb_table_free(ptr::null_mut());
        ehgb_curve_free(ptr::null_mut());
        ehgb_model_free(ptr::null_mut());
    }
}

#[test]
fn synthesis_reaches_requested_balance() {
    let t = load();
    let mut n = 0usize;
    unsafe {
        assert_eq!(
            ehgb_required_synthetic_count(38, 262, 1.0, &mut n),
            EhgbStatus::Ok
        );
        assert_eq!(n, 224);
        assert_eq!(
            ehgb_required_synthetic_count(38, 262, 0.1, &mut n),
            EhgbStatus::DomainError
        );
        assert!(last_error().contains("down-sample"));

        let mut s = ptr::null_mut();
        assert_eq!(
            ehgb_synthesize(t, EhgbMethod::Smote, 1.0, 5, 7, &mut s),
            EhgbStatus::Ok
        );
        assert_eq!(ehgb_table_n_plus(s), 262);
        assert_eq!(ehgb_table_n_minus(s), 262);

        let dir = tempfile::tempdir().unwrap();
        let out: PathBuf = dir.path().join("nested/syn.csv");
        let c = CString::new(out.to_str().unwrap()).unwrap();
        assert_eq!(ehgb_table_write(s, c.as_ptr()), EhgbStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ehgb_table_load(c.as_ptr(), &mut back), EhgbStatus::Ok);
        assert_eq!(ehgb_table_rows(back), 524);
        ehgb_table_free(back);
        ehgb_table_free(s);
        ehgb_table_free(t);
    }
}

#[test]
fn envelopes_and_labels() {
    let a0 = 38.0 / 262.0;
    let mut cp = 0.0;
    let mut cm = 0.0;
    unsafe {
        assert_eq!(ehgb_activation(0.7, a0, 4.0, &mut cp), EhgbStatus::Ok);
        assert_eq!(ehgb_inactivation(0.7, a0, 4.0, &mut cm), EhgbStatus::Ok);
        assert!((cp + cm - 1.0).abs() < 1e-12);
        assert_eq!(
            ehgb_activation(0.7, 1.5, 4.0, &mut cp),
            EhgbStatus::DomainError
        );

        let mut pre = -1;
        assert_eq!(ehgb_label_by_gestation(36.9, &mut pre), EhgbStatus::Ok);
        assert_eq!(pre, 1);
        assert_eq!(ehgb_label_by_gestation(37.0, &mut pre), EhgbStatus::Ok);
        assert_eq!(pre, 0);
    }
}

#[test]
fn optimize_curve_accessors() {
    let t = load();
    let grid = [0.2, 0.6, 1.0];
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(
            ehgb_optimize_alpha(
                t,
                EhgbMethod::Smote,
                grid.as_ptr(),
                grid.len(),
                2,
                3,
                &mut c
            ),
            EhgbStatus::Ok
        );
        assert_eq!(ehgb_curve_len(c), 3);
        let star = ehgb_curve_alpha_star(c);
        assert!(grid.contains(&star));
        let mut best = f64::NEG_INFINITY;
        for (i, &a) in grid.iter().enumerate() {
            let mut p = EhgbAlphaPoint::default();
            assert_eq!(ehgb_curve_point(c, i, &mut p), EhgbStatus::Ok);
            assert_eq!(p.alpha, a);
            assert!((p.f_e - p.f_score * p.c_plus * p.c_minus).abs() < 1e-9 * p.f_score.max(1.0));
            best = best.max(p.f_e);
        }
        let mut p = EhgbAlphaPoint::default();
        assert_eq!(ehgb_curve_point(c, 3, &mut p), EhgbStatus::DomainError);
        let mut at_star = EhgbAlphaPoint::default();
        let idx = grid.iter().position(|&a| a == star).unwrap();
        ehgb_curve_point(c, idx, &mut at_star);
        assert_eq!(at_star.f_e, best);
        ehgb_curve_free(c);

        let bad = [0.05];
        let mut c2 = ptr::null_mut();
        assert_eq!(
            ehgb_optimize_alpha(t, EhgbMethod::Smote, bad.as_ptr(), 1, 1, 3, &mut c2),
            EhgbStatus::ConfigError
        );
        ehgb_table_free(t);
    }
}

#[test]
fn train_score_and_auc() {
    let t = load();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(
            ehgb_train(t, EhgbClassifier::Ldc, 1, &mut m),
            EhgbStatus::Ok
        );
        let x = [0.02, 0.38, 0.30, 0.75];
        let mut s = f64::NAN;
        assert_eq!(ehgb_model_score(m, x.as_ptr(), 4, &mut s), EhgbStatus::Ok);
        assert!(s.is_finite());
        assert_ne!(ehgb_model_score(m, x.as_ptr(), 3, &mut s), EhgbStatus::Ok);
        ehgb_model_free(m);

        let scores = [0.9, 0.8, 0.1, 0.3];
        let labels = [1u8, 0, 0, 1];
        let mut a = 0.0;
        assert_eq!(
            ehgb_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut a),
            EhgbStatus::Ok
        );
        assert!((a - 0.75).abs() < 1e-12);
        ehgb_table_free(t);
    }
}

#[test]
fn feature_extraction_of_a_pure_tone() {
    let fs = 20.0;
    let x: Vec<f64> = (0..2400)
        .map(|i| (2.0 * std::f64::consts::PI * 0.5 * i as f64 / fs).sin())
        .collect();
    let cfg = ehgb_feature_config_default();
    let mut fv = EhgbFeatureVector::default();
    assert_eq!(
        unsafe { ehgb_extract_features(x.as_ptr(), x.len(), fs, &cfg, &mut fv) },
        EhgbStatus::Ok
    );
    assert!((fv.f_peak - 0.5).abs() < 0.02, "{fv:?}");
    assert!((fv.rms - 0.5f64.sqrt()).abs() < 0.05, "{fv:?}");
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ehg_balance.h"),
    )
    .unwrap();
    for f in [
        "ehgb_table_load",
        "ehgb_optimize_alpha",
        "ehgb_last_error_message",
        "ehgb_extract_features",
    ] {
        assert!(h.contains(f), "{f} missing from header");
    }
    let v = unsafe { CStr::from_ptr(ehgb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ehg_balance.h"))
        .status()
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    assert!(status.success());
}
