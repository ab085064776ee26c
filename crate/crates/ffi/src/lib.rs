//! C ABI for `ehg-balance`.
//!
//! Objects cross the boundary as opaque handles created by `*_load`,
//! `*_new` or computation functions and released with the matching `*_free`.
//! Every fallible function returns an [`EhgbStatus`]; on failure a message
//! is available from [`ehgb_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ehg_balance::eval;
use ehg_balance::ingest::{self, FeatureTable, Label};
use ehg_balance::learn::{self, ClassifierKind, Hyperparams, TrainedModel};
use ehg_balance::score::{self, AlphaCurve, EnvelopeParams, OptimizeConfig};
use ehg_balance::sigfeat::{self, FeatureConfig};
use ehg_balance::synth::{self, Method, SynthesisPlan};
use ehg_balance::{Error, SignalRecord};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhgbStatus {
    Ok = 0,
    NullPointer = 1,
    ConfigError = 2,
    ParseError = 3,
    DomainError = 4,
    IoError = 5,
    InternalError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhgbMethod {
    Smote = 0,
    Adasyn = 1,
}

impl From<EhgbMethod> for Method {
    fn from(m: EhgbMethod) -> Self {
        match m {
            EhgbMethod::Smote => Method::Smote,
            EhgbMethod::Adasyn => Method::Adasyn,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhgbClassifier {
    Lrc = 0,
    Ldc = 1,
    Dtc = 2,
    Gbc = 3,
    Svc = 4,
    Rf = 5,
}

impl From<EhgbClassifier> for ClassifierKind {
    fn from(k: EhgbClassifier) -> Self {
        match k {
            EhgbClassifier::Lrc => ClassifierKind::Lrc,
            EhgbClassifier::Ldc => ClassifierKind::Ldc,
            EhgbClassifier::Dtc => ClassifierKind::Dtc,
            EhgbClassifier::Gbc => ClassifierKind::Gbc,
            EhgbClassifier::Svc => ClassifierKind::Svc,
            EhgbClassifier::Rf => ClassifierKind::Rf,
        }
    }
}

/// Opaque feature table.
pub struct EhgbFeatureTable(FeatureTable);

/// Opaque result of a balance-coefficient sweep.
pub struct EhgbAlphaCurve(AlphaCurve);

/// Opaque fitted classifier.
pub struct EhgbModel(TrainedModel);

/// One grid point of an [`EhgbAlphaCurve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EhgbAlphaPoint {
    pub alpha: f64,
    pub f_score: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub f_e: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EhgbFeatureConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub filter_order: usize,
    pub sampen_m: usize,
    pub sampen_r: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EhgbFeatureVector {
    pub rms: f64,
    pub f_med: f64,
    pub f_peak: f64,
    pub e_samp: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EhgbStatus {
    match err {
        Error::Config(_) => EhgbStatus::ConfigError,
        Error::Parse { .. } => EhgbStatus::ParseError,
        Error::Domain(_) => EhgbStatus::DomainError,
        Error::Io { .. } => EhgbStatus::IoError,
        Error::Internal(_) => EhgbStatus::InternalError,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), EhgbStatus>) -> EhgbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EhgbStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside ehg-balance".into());
            EhgbStatus::Panic
        }
    }
}

fn lib<T>(r: ehg_balance::Result<T>) -> Result<T, EhgbStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null_check<T>(p: *const T, what: &str) -> Result<(), EhgbStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(EhgbStatus::NullPointer)
    } else {
        Ok(())
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, EhgbStatus> {
    null_check(p, "path")?;
    // SAFETY: caller passes a NUL-terminated string.
    let s = unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
        set_error("path is not valid UTF-8".into());
        EhgbStatus::ConfigError
    })?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], EhgbStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    null_check(p, what)?;
    // SAFETY: caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ehgb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ehgb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load a feature table CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ehgb_table_load(
    path: *const c_char,
    out: *mut *mut EhgbFeatureTable,
) -> EhgbStatus {
    guard(|| {
        null_check(out, "out")?;
        let path = unsafe { path_arg(path)? };
        let table = lib(ingest::load_feature_table(&path))?;
        unsafe { *out = Box::into_raw(Box::new(EhgbFeatureTable(table))) };
        Ok(())
    })
}

/// Write a feature table CSV (atomically).
///
/// # Safety
/// `table` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ehgb_table_write(
    table: *const EhgbFeatureTable,
    path: *const c_char,
) -> EhgbStatus {
    guard(|| {
        null_check(table, "table")?;
        let path = unsafe { path_arg(path)? };
        lib(ingest::write_feature_table(unsafe { &(*table).0 }, &path))
    })
}

/// # Safety
/// `table` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn ehgb_table_free(table: *mut EhgbFeatureTable) {
    if !table.is_null() {
        drop(unsafe { Box::from_raw(table) });
    }
}

/// # Safety
/// `table` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ehgb_table_rows(table: *const EhgbFeatureTable) -> usize {
    unsafe { table.as_ref() }.map_or(0, |t| t.0.len())
}

/// # Safety
/// `table` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ehgb_table_features(table: *const EhgbFeatureTable) -> usize {
    unsafe { table.as_ref() }.map_or(0, |t| t.0.n_features())
}

/// Preterm (minority) row count.
///
/// # Safety
/// `table` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ehgb_table_n_plus(table: *const EhgbFeatureTable) -> usize {
    unsafe { table.as_ref() }.map_or(0, |t| t.0.n_plus())
}

/// Term (majority) row count.
///
/// # Safety
/// `table` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ehgb_table_n_minus(table: *const EhgbFeatureTable) -> usize {
    unsafe { table.as_ref() }.map_or(0, |t| t.0.n_minus())
}

/// Per-feature class-separation scores, written to `out[0..len]`; `len`
/// must equal the feature count.
///
/// # Safety
/// `table` must be live; `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ehgb_feature_scores(
    table: *const EhgbFeatureTable,
    out: *mut f64,
    len: usize,
) -> EhgbStatus {
    guard(|| {
        null_check(table, "table")?;
        null_check(out, "out")?;
        let scores = lib(score::feature_score(unsafe { &(*table).0 }))?;
        if scores.len() != len {
            set_error(format!(
                "table has {} features, buffer holds {len}",
                scores.len()
            ));
            return Err(EhgbStatus::DomainError);
        }
        unsafe { ptr::copy_nonoverlapping(scores.as_ptr(), out, len) };
        Ok(())
    })
}

/// Over-sample the minority class to balance `alpha`; the result is a new
/// table.
///
/// # Safety
/// `table` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_synthesize(
    table: *const EhgbFeatureTable,
    method: EhgbMethod,
    alpha: f64,
    k: usize,
    seed: u64,
    out: *mut *mut EhgbFeatureTable,
) -> EhgbStatus {
    guard(|| {
        null_check(table, "table")?;
        null_check(out, "out")?;
        let plan = SynthesisPlan::new(method.into(), alpha, seed).with_k(k);
        let t = lib(synth::synthesize(unsafe { &(*table).0 }, &plan))?;
        unsafe { *out = Box::into_raw(Box::new(EhgbFeatureTable(t))) };
        Ok(())
    })
}

/// Synthetic rows needed to reach `alpha`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_required_synthetic_count(
    n_plus: usize,
    n_minus: usize,
    alpha: f64,
    out: *mut usize,
) -> EhgbStatus {
    guard(|| {
        null_check(out, "out")?;
        let n = lib(synth::required_synthetic_count(n_plus, n_minus, alpha))?;
        unsafe { *out = n };
        Ok(())
    })
}

/// Sweep `grid` (or the default grid when `grid_len` is 0) and build the
/// effective-score curve.
///
/// # Safety
/// `table` must be live, `grid` readable for `grid_len` doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_optimize_alpha(
    table: *const EhgbFeatureTable,
    method: EhgbMethod,
    grid: *const f64,
    grid_len: usize,
    repeats: usize,
    seed: u64,
    out: *mut *mut EhgbAlphaCurve,
) -> EhgbStatus {
    guard(|| {
        null_check(table, "table")?;
        null_check(out, "out")?;
        let t = unsafe { &(*table).0 };
        let grid = unsafe { slice_arg(grid, grid_len, "grid")? };
        let grid = if grid.is_empty() {
            score::default_grid(t.alpha())
        } else {
            grid.to_vec()
        };
        let mut cfg = OptimizeConfig::new(method.into(), grid, seed);
        cfg.repeats = repeats;
        let curve = lib(score::optimize_alpha(t, &cfg))?;
        unsafe { *out = Box::into_raw(Box::new(EhgbAlphaCurve(curve))) };
        Ok(())
    })
}

/// # Safety
/// `curve` must be a live handle or NULL (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn ehgb_curve_alpha_star(curve: *const EhgbAlphaCurve) -> f64 {
    unsafe { curve.as_ref() }.map_or(f64::NAN, |c| c.0.alpha_star)
}

/// # Safety
/// `curve` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ehgb_curve_len(curve: *const EhgbAlphaCurve) -> usize {
    unsafe { curve.as_ref() }.map_or(0, |c| c.0.points.len())
}

/// # Safety
/// `curve` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_curve_point(
    curve: *const EhgbAlphaCurve,
    index: usize,
    out: *mut EhgbAlphaPoint,
) -> EhgbStatus {
    guard(|| {
        null_check(curve, "curve")?;
        null_check(out, "out")?;
        let Some(p) = unsafe { &(*curve).0 }.points.get(index) else {
            set_error(format!("curve index {index} out of range"));
            return Err(EhgbStatus::DomainError);
        };
        unsafe {
            *out = EhgbAlphaPoint {
                alpha: p.alpha,
                f_score: p.f_score,
                c_plus: p.c_plus,
                c_minus: p.c_minus,
                f_e: p.f_e,
            }
        };
        Ok(())
    })
}

/// Write the curve as CSV (atomically).
///
/// # Safety
/// `curve` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ehgb_curve_write_csv(
    curve: *const EhgbAlphaCurve,
    path: *const c_char,
) -> EhgbStatus {
    guard(|| {
        null_check(curve, "curve")?;
        let path = unsafe { path_arg(path)? };
        lib(ehg_balance::io::write_atomic(
            &path,
            unsafe { &(*curve).0 }.to_csv().as_bytes(),
        ))
    })
}

/// # Safety
/// `curve` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn ehgb_curve_free(curve: *mut EhgbAlphaCurve) {
    if !curve.is_null() {
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// Minority-side envelope C+ for original balance `alpha0` and steepness `k`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_activation(
    alpha: f64,
    alpha0: f64,
    k: f64,
    out: *mut f64,
) -> EhgbStatus {
    guard(|| {
        null_check(out, "out")?;
        let p = lib(EnvelopeParams::new(alpha0, k))?;
        unsafe { *out = score::activation(alpha, &p) };
        Ok(())
    })
}

/// Majority-side envelope C-.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_inactivation(
    alpha: f64,
    alpha0: f64,
    k: f64,
    out: *mut f64,
) -> EhgbStatus {
    guard(|| {
        null_check(out, "out")?;
        let p = lib(EnvelopeParams::new(alpha0, k))?;
        unsafe { *out = score::inactivation(alpha, &p) };
        Ok(())
    })
}

/// Sets `*is_preterm` to 1 iff `delivery_weeks < 37`.
///
/// # Safety
/// `is_preterm` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_label_by_gestation(
    delivery_weeks: f64,
    is_preterm: *mut i32,
) -> EhgbStatus {
    guard(|| {
        null_check(is_preterm, "is_preterm")?;
        let l = lib(ingest::label_by_gestation(delivery_weeks))?;
        unsafe { *is_preterm = (l == Label::Preterm) as i32 };
        Ok(())
    })
}

/// Fit a classifier with default hyperparameters.
///
/// # Safety
/// `table` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_train(
    table: *const EhgbFeatureTable,
    kind: EhgbClassifier,
    seed: u64,
    out: *mut *mut EhgbModel,
) -> EhgbStatus {
    guard(|| {
        null_check(table, "table")?;
        null_check(out, "out")?;
        let m = lib(learn::train(
            kind.into(),
            unsafe { &(*table).0 },
            &Hyperparams::default(),
            seed,
        ))?;
        unsafe { *out = Box::into_raw(Box::new(EhgbModel(m))) };
        Ok(())
    })
}

/// Decision score for one feature vector; positive means preterm.
///
/// # Safety
/// `model` must be live, `x` readable for `len` doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_model_score(
    model: *const EhgbModel,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> EhgbStatus {
    guard(|| {
        null_check(model, "model")?;
        null_check(out, "out")?;
        let x = unsafe { slice_arg(x, len, "x")? };
        let s = lib(unsafe { &(*model).0 }.decision_score(x))?;
        unsafe { *out = s };
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn ehgb_model_free(model: *mut EhgbModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Area under the ROC curve; `is_preterm[i]` non-zero marks a positive.
///
/// # Safety
/// `scores` and `is_preterm` must be readable for `n` elements; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_auc(
    scores: *const f64,
    is_preterm: *const u8,
    n: usize,
    out: *mut f64,
) -> EhgbStatus {
    guard(|| {
        null_check(out, "out")?;
        let s = unsafe { slice_arg(scores, n, "scores")? };
        let y = unsafe { slice_arg(is_preterm, n, "is_preterm")? };
        let truth: Vec<Label> = y
            .iter()
            .map(|&v| if v != 0 { Label::Preterm } else { Label::Term })
            .collect();
        let a = lib(eval::auc(s, &truth))?;
        unsafe { *out = a };
        Ok(())
    })
}

/// Default feature-extraction settings.
#[no_mangle]
pub extern "C" fn ehgb_feature_config_default() -> EhgbFeatureConfig {
    let d = FeatureConfig::default();
    EhgbFeatureConfig {
        band_low_hz: d.band_low_hz,
        band_high_hz: d.band_high_hz,
        filter_order: d.filter_order,
        sampen_m: d.sampen_m,
        sampen_r: d.sampen_r,
    }
}

/// Features of one single-channel signal sampled at `fs` Hz.
///
/// # Safety
/// `samples` must be readable for `n` doubles; `config` and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehgb_extract_features(
    samples: *const f64,
    n: usize,
    fs: f64,
    config: *const EhgbFeatureConfig,
    out: *mut EhgbFeatureVector,
) -> EhgbStatus {
    guard(|| {
        null_check(config, "config")?;
        null_check(out, "out")?;
        let x = unsafe { slice_arg(samples, n, "samples")? };
        let c = unsafe { *config };
        let cfg = FeatureConfig {
            channel: 0,
            band_low_hz: c.band_low_hz,
            band_high_hz: c.band_high_hz,
            filter_order: c.filter_order,
            sampen_m: c.sampen_m,
            sampen_r: c.sampen_r,
        };
        let rec = lib(SignalRecord::new("ffi", fs, vec![x.to_vec()], 0.0, 40.0))?;
        let fv = lib(sigfeat::extract_features(&rec, &cfg))?;
        unsafe {
            *out = EhgbFeatureVector {
                rms: fv.rms,
                f_med: fv.f_med,
                f_peak: fv.f_peak,
                e_samp: fv.e_samp,
            }
        };
        Ok(())
    })
}
