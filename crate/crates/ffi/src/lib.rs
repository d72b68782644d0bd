//! C interface to `unlearn-core`.
//!
//! Every fallible function returns an [`UnlearnStatus`]; on failure the
//! message is available from [`unlearn_last_error_message`] on the same
//! thread. Handles are opaque and owned by the caller, who releases them with
//! the matching `_free` function. Strings returned through out-parameters are
//! released with [`unlearn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use unlearn_core::data::{load_dataset, DataPartition, LabeledExample, LoadOptions};
use unlearn_core::harness::{render_rows, ExperimentConfig, ExperimentRecord, ReportFormat, ReportRow, Runner};
use unlearn_core::metrics::{js_divergence, kl_divergence, relative_accuracy};
use unlearn_core::model::{
    evaluate_accuracy, load_checkpoint, predict_distribution, random_init, save_checkpoint, train, Architecture,
    Classifier, TrainConfig,
};
use unlearn_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlearnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    UnknownDataset = 4,
    CorruptData = 5,
    ShapeMismatch = 6,
    UnknownMethod = 7,
    Incompatible = 8,
    UndefinedBaseline = 9,
    UnknownFormat = 10,
    SchemaVersion = 11,
    Config = 12,
    Checkpoint = 13,
    Io = 14,
    /// A Rust panic was caught at the boundary.
    Internal = 99,
}

/// Which half of a dataset to use.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlearnSplit {
    Train = 0,
    Test = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlearnReportFormat {
    Markdown = 0,
    Csv = 1,
}

/// Opaque loaded dataset.
pub struct UnlearnDataset(DataPartition);

/// Opaque classifier.
pub struct UnlearnModel(Classifier);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> UnlearnStatus {
    match e {
        Error::UnknownDataset(_) => UnlearnStatus::UnknownDataset,
        Error::CorruptData { .. } => UnlearnStatus::CorruptData,
        Error::InvalidArgument(_) | Error::EmptyData(_) | Error::LabelOutOfRange { .. } => {
            UnlearnStatus::InvalidArgument
        }
        Error::ShapeMismatch { .. } => UnlearnStatus::ShapeMismatch,
        Error::UnknownMethod(_) => UnlearnStatus::UnknownMethod,
        Error::Incompatible { .. } => UnlearnStatus::Incompatible,
        Error::UndefinedBaseline(_) => UnlearnStatus::UndefinedBaseline,
        Error::UnknownFormat(_) => UnlearnStatus::UnknownFormat,
        Error::SchemaVersion { .. } => UnlearnStatus::SchemaVersion,
        Error::Config(_) | Error::Json(_) => UnlearnStatus::Config,
        Error::Checkpoint(_) => UnlearnStatus::Checkpoint,
        Error::Io(_) | Error::Csv(_) => UnlearnStatus::Io,
    }
}

struct Fail(UnlearnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UnlearnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            UnlearnStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal error: {msg}"));
            UnlearnStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(UnlearnStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(UnlearnStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(UnlearnStatus::Internal, "string contains NUL".into()))?;
    write(out, c.into_raw(), "output string pointer")
}

fn json_err(e: serde_json::Error) -> Fail {
    Fail(UnlearnStatus::Config, e.to_string())
}

/// Message of the last failure on this thread, or NULL after a success. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn unlearn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static version string.
#[no_mangle]
pub extern "C" fn unlearn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn unlearn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a registered dataset. `options_json` may be NULL for defaults.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dataset_load(
    name: *const c_char,
    options_json: *const c_char,
    out: *mut *mut UnlearnDataset,
) -> UnlearnStatus {
    guard(|| {
        let name = text(name, "name")?;
        let options: LoadOptions = if options_json.is_null() {
            LoadOptions::default()
        } else {
            serde_json::from_str(text(options_json, "options_json")?).map_err(json_err)?
        };
        let data = load_dataset(name, &options)?;
        write(out, Box::into_raw(Box::new(UnlearnDataset(data))), "out")
    })
}

/// # Safety
/// `ds` must be NULL or a handle from [`unlearn_dataset_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dataset_free(ds: *mut UnlearnDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

fn part(ds: &UnlearnDataset, split: UnlearnSplit) -> &[LabeledExample] {
    match split {
        UnlearnSplit::Train => &ds.0.train,
        UnlearnSplit::Test => &ds.0.test,
    }
}

/// # Safety
/// `ds` must be a live dataset handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dataset_shape(
    ds: *const UnlearnDataset,
    split: UnlearnSplit,
    out_len: *mut usize,
    out_feature_dim: *mut usize,
    out_num_classes: *mut usize,
) -> UnlearnStatus {
    guard(|| {
        let ds = borrow(ds, "dataset")?;
        write(out_len, part(ds, split).len(), "out_len")?;
        write(out_feature_dim, ds.0.feature_dim(), "out_feature_dim")?;
        write(out_num_classes, ds.0.num_classes, "out_num_classes")
    })
}

/// # Safety
/// `hidden` must point to `hidden_len` widths (or be NULL when 0); `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_model_random_init(
    input_dim: usize,
    hidden: *const usize,
    hidden_len: usize,
    num_classes: usize,
    seed: u64,
    out: *mut *mut UnlearnModel,
) -> UnlearnStatus {
    guard(|| {
        let hidden = if hidden_len == 0 {
            Vec::new()
        } else if hidden.is_null() {
            return Err(null("hidden"));
        } else {
            std::slice::from_raw_parts(hidden, hidden_len).to_vec()
        };
        let arch = Architecture::new(input_dim, hidden, num_classes)?;
        write(out, Box::into_raw(Box::new(UnlearnModel(random_init(&arch, seed)?))), "out")
    })
}

/// Trains a copy of `model` on the dataset's training half. `config_json`
/// holds a training config (`epochs`, `learning_rate`, `batch_size`, `seed`,
/// optional `optimizer`), or NULL for defaults.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_model_train(
    model: *const UnlearnModel,
    ds: *const UnlearnDataset,
    config_json: *const c_char,
    out: *mut *mut UnlearnModel,
) -> UnlearnStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let ds = borrow(ds, "dataset")?;
        let cfg: TrainConfig = if config_json.is_null() {
            TrainConfig::default()
        } else {
            serde_json::from_str(text(config_json, "config_json")?).map_err(json_err)?
        };
        cfg.validate()?;
        let trained = train(&model.0, &ds.0.train, &cfg)?;
        write(out, Box::into_raw(Box::new(UnlearnModel(trained))), "out")
    })
}

/// # Safety
/// `model` must be NULL or a model handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn unlearn_model_free(model: *mut UnlearnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_model_param_count(model: *const UnlearnModel, out: *mut usize) -> UnlearnStatus {
    guard(|| write(out, borrow(model, "model")?.0.param_count(), "out"))
}

/// Class probabilities for one input. `probs` must have room for
/// `probs_len >= num_classes` values.
///
/// # Safety
/// `features` must point to `features_len` doubles and `probs` to `probs_len`.
#[no_mangle]
pub unsafe extern "C" fn unlearn_model_predict(
    model: *const UnlearnModel,
    features: *const f64,
    features_len: usize,
    probs: *mut f64,
    probs_len: usize,
) -> UnlearnStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let x = slice(features, features_len, "features")?;
        let k = model.0.num_classes();
        if probs.is_null() {
            return Err(null("probs"));
        }
        if probs_len < k {
            return Err(Error::ShapeMismatch { expected: k, actual: probs_len }.into());
        }
        let p = predict_distribution(&model.0, &LabeledExample::new(x.to_vec(), 0))?;
        std::slice::from_raw_parts_mut(probs, k).copy_from_slice(&p);
        Ok(())
    })
}

/// Top-1 accuracy in [0, 1] on one half of a dataset.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_model_accuracy(
    model: *const UnlearnModel,
    ds: *const UnlearnDataset,
    split: UnlearnSplit,
    out: *mut f64,
) -> UnlearnStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let ds = borrow(ds, "dataset")?;
        write(out, evaluate_accuracy(&model.0, part(ds, split))?, "out")
    })
}

/// # Safety
/// `model` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn unlearn_model_save(model: *const UnlearnModel, path: *const c_char) -> UnlearnStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        save_checkpoint(&model.0, Path::new(text(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `path` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_model_load(path: *const c_char, out: *mut *mut UnlearnModel) -> UnlearnStatus {
    guard(|| {
        let model = load_checkpoint(Path::new(text(path, "path")?))?;
        write(out, Box::into_raw(Box::new(UnlearnModel(model))), "out")
    })
}

/// Base-2 Jensen-Shannon divergence of two distributions of length `len`.
///
/// # Safety
/// `p` and `q` must point to `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_js_divergence(p: *const f64, q: *const f64, len: usize, out: *mut f64) -> UnlearnStatus {
    guard(|| write(out, js_divergence(slice(p, len, "p")?, slice(q, len, "q")?)?, "out"))
}

/// Base-2 KL(p ‖ q).
///
/// # Safety
/// `p` and `q` must point to `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_kl_divergence(p: *const f64, q: *const f64, len: usize, out: *mut f64) -> UnlearnStatus {
    guard(|| write(out, kl_divergence(slice(p, len, "p")?, slice(q, len, "q")?)?, "out"))
}

/// `a_u / a_b × 100`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unlearn_relative_accuracy(a_u: f64, a_b: f64, out: *mut f64) -> UnlearnStatus {
    guard(|| write(out, relative_accuracy(a_u, a_b)?, "out"))
}

/// Runs one experiment from a TOML config and returns its record as JSON.
/// `cache_dir` may be NULL for no baseline cache.
///
/// # Safety
/// Strings NUL-terminated; `out_json` writable. Free the result with
/// [`unlearn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn unlearn_run_experiment(
    config_toml: *const c_char,
    cache_dir: *const c_char,
    out_json: *mut *mut c_char,
) -> UnlearnStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_toml(text(config_toml, "config_toml")?)?;
        let cache = if cache_dir.is_null() { None } else { Some(text(cache_dir, "cache_dir")?.into()) };
        let record = Runner::new(cache).run_experiment(&cfg)?;
        write_string(out_json, serde_json::to_string(&record).map_err(json_err)?)
    })
}

/// Renders a results table from a JSON array of records (as returned by
/// [`unlearn_run_experiment`]), one row per record.
///
/// # Safety
/// `records_json` NUL-terminated; `out` writable. Free the result with
/// [`unlearn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn unlearn_emit_report(
    records_json: *const c_char,
    format: UnlearnReportFormat,
    out: *mut *mut c_char,
) -> UnlearnStatus {
    guard(|| {
        let records: Vec<ExperimentRecord> =
            serde_json::from_str(text(records_json, "records_json")?).map_err(json_err)?;
        let format = match format {
            UnlearnReportFormat::Markdown => ReportFormat::Markdown,
            UnlearnReportFormat::Csv => ReportFormat::Csv,
        };
        let rows: Vec<ReportRow> = records.iter().map(ReportRow::from_record).collect();
        write_string(out, render_rows(&rows, format)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_internal_errors() {
        assert_eq!(guard(|| panic!("boom")), UnlearnStatus::Internal);
        let msg = unsafe { CStr::from_ptr(unlearn_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
        assert_eq!(guard(|| Ok(())), UnlearnStatus::Ok);
        assert!(unlearn_last_error_message().is_null());
    }

    #[test]
    fn messages_with_nul_survive() {
        set_error("a\0b".into());
        let msg = unsafe { CStr::from_ptr(unlearn_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "a b");
    }
}
