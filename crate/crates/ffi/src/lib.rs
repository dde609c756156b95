//! C ABI over `moltr`.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`MoltrStatus`]; results go through out-pointers.
//! * Handles (`MoltrDataset`, `MoltrModel`, `MoltrSoftLabels`) are opaque, created by
//!   this library and released with the matching `*_free`. Passing NULL to a free is a no-op.
//! * On failure, [`moltr_last_error`] returns a message for the calling thread.
//! * Config arguments are JSON strings; NULL selects the defaults.
//! * Panics never cross the boundary; they surface as `MOLTR_STATUS_PANIC`.
//!
//! The header `include/moltr.h` is generated from this file by cbindgen.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use moltr::data::{generate_dataset, load_dataset, save_dataset, split_by_time, Dataset, GeneratorConfig};
use moltr::distill::{
    fuse_soft_labels, inject_boost, self_distill_step, train_student, train_teacher, BoostPredicate, BoostRule,
    DistillConfig, SoftLabelSet, TeacherEnsemble, TrainConfig,
};
use moltr::eval::{evaluate_model, kendall_tau, ndcg_at_k, prediction_difference, EvalOptions};
use moltr::{Error, Model};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoltrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    InvalidConfig = 4,
    Training = 5,
    Parse = 6,
    Io = 7,
    Calibration = 8,
    BufferTooSmall = 9,
    Internal = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoltrBoostKind {
    /// Established items with rating at least `rho`.
    RatingAtLeast = 0,
    NewItems = 1,
}

pub struct MoltrDataset {
    inner: Dataset,
}

pub struct MoltrModel {
    inner: Model,
}

pub struct MoltrSoftLabels {
    inner: SoftLabelSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: MoltrStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Input(_) | Error::NonFiniteUpdate { .. } => MoltrStatus::InvalidInput,
            Error::Config(_) => MoltrStatus::InvalidConfig,
            Error::Training(_) => MoltrStatus::Training,
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => MoltrStatus::Parse,
            Error::Io { .. } => MoltrStatus::Io,
            Error::Calibration { .. } => MoltrStatus::Calibration,
            Error::Internal(_) => MoltrStatus::Internal,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn fail(status: MoltrStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MoltrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MoltrStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            MoltrStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(MoltrStatus::NullArgument, format!("{name} is NULL")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(MoltrStatus::NullArgument, format!("{name} is NULL")))
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(MoltrStatus::NullArgument, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MoltrStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn optional_json<T: serde::de::DeserializeOwned + Default>(p: *const c_char, name: &str) -> Result<T, Failure> {
    if p.is_null() {
        return Ok(T::default());
    }
    serde_json::from_str(string(p, name)?).map_err(|e| fail(MoltrStatus::InvalidConfig, format!("{name}: {e}")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(MoltrStatus::NullArgument, format!("{name} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Default network sized to the dataset when the caller gave no layer dims.
fn fit_dims(train: &mut TrainConfig, explicit: bool, m: usize) {
    if !explicit {
        train.mlp.layer_dims[0] = m;
    }
}

/// Message describing the last failed call on this thread ("" after a success).
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn moltr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn moltr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a synthetic dataset from a generator config (JSON, NULL for defaults).
#[no_mangle]
pub unsafe extern "C" fn moltr_dataset_generate(
    config_json: *const c_char,
    out: *mut *mut MoltrDataset,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let config: GeneratorConfig = optional_json(config_json, "config_json")?;
        *out = boxed(MoltrDataset {
            inner: generate_dataset(&config)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_dataset_load(path: *const c_char, out: *mut *mut MoltrDataset) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(MoltrDataset {
            inner: load_dataset(string(path, "path")?)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_dataset_save(dataset: *const MoltrDataset, path: *const c_char) -> MoltrStatus {
    guard(|| {
        save_dataset(&borrow(dataset, "dataset")?.inner, string(path, "path")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_dataset_free(dataset: *mut MoltrDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

#[no_mangle]
pub unsafe extern "C" fn moltr_dataset_num_queries(dataset: *const MoltrDataset, out: *mut usize) -> MoltrStatus {
    guard(|| {
        *out_ptr(out, "out")? = borrow(dataset, "dataset")?.inner.len();
        Ok(())
    })
}

/// Number of items in query group `query`.
#[no_mangle]
pub unsafe extern "C" fn moltr_dataset_query_len(
    dataset: *const MoltrDataset,
    query: usize,
    out: *mut usize,
) -> MoltrStatus {
    guard(|| {
        let ds = &borrow(dataset, "dataset")?.inner;
        let g = ds
            .groups
            .get(query)
            .ok_or_else(|| fail(MoltrStatus::InvalidInput, format!("query {query} out of range")))?;
        *out_ptr(out, "out")? = g.len();
        Ok(())
    })
}

/// Splits into groups before `boundary_day` and the rest.
#[no_mangle]
pub unsafe extern "C" fn moltr_dataset_split_by_time(
    dataset: *const MoltrDataset,
    boundary_day: u32,
    before: *mut *mut MoltrDataset,
    after: *mut *mut MoltrDataset,
) -> MoltrStatus {
    guard(|| {
        let before = out_ptr(before, "before")?;
        let after = out_ptr(after, "after")?;
        let (a, b) = split_by_time(&borrow(dataset, "dataset")?.inner, boundary_day)?;
        *before = boxed(MoltrDataset { inner: a });
        *after = boxed(MoltrDataset { inner: b });
        Ok(())
    })
}

fn has_key(json: Option<&str>, path: &[&str]) -> bool {
    let Some(text) = json else { return false };
    let Ok(mut v) = serde_json::from_str::<serde_json::Value>(text) else {
        return false;
    };
    for key in path {
        match v.get(key) {
            Some(next) => v = next.clone(),
            None => return false,
        }
    }
    true
}

/// Trains the teacher for `objective` with a training config (JSON, NULL for defaults).
#[no_mangle]
pub unsafe extern "C" fn moltr_model_train_teacher(
    dataset: *const MoltrDataset,
    objective: usize,
    train_config_json: *const c_char,
    out: *mut *mut MoltrModel,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = &borrow(dataset, "dataset")?.inner;
        let mut cfg: TrainConfig = optional_json(train_config_json, "train_config_json")?;
        let text = (!train_config_json.is_null())
            .then(|| string(train_config_json, "train_config_json"))
            .transpose()?;
        fit_dims(&mut cfg, has_key(text, &["mlp", "layer_dims"]), ds.m);
        *out = boxed(MoltrModel {
            inner: train_teacher(ds, objective, &cfg)?,
        });
        Ok(())
    })
}

unsafe fn distill_config(json: *const c_char, m: usize) -> Result<DistillConfig, Failure> {
    let mut cfg: DistillConfig = optional_json(json, "distill_config_json")?;
    let text = (!json.is_null())
        .then(|| string(json, "distill_config_json"))
        .transpose()?;
    fit_dims(&mut cfg.train, has_key(text, &["train", "mlp", "layer_dims"]), m);
    Ok(cfg)
}

/// Distills a student from soft labels and the dataset's primary labels.
#[no_mangle]
pub unsafe extern "C" fn moltr_model_train_student(
    dataset: *const MoltrDataset,
    soft_labels: *const MoltrSoftLabels,
    distill_config_json: *const c_char,
    out: *mut *mut MoltrModel,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = &borrow(dataset, "dataset")?.inner;
        let soft = &borrow(soft_labels, "soft_labels")?.inner;
        let cfg = distill_config(distill_config_json, ds.m)?;
        *out = boxed(MoltrModel {
            inner: train_student(ds, soft, &cfg)?,
        });
        Ok(())
    })
}

/// Next student generation: `previous` scores `dataset` and a fresh student learns from them.
/// Without explicit layer dims the previous student's structure is kept.
#[no_mangle]
pub unsafe extern "C" fn moltr_model_self_distill(
    previous: *const MoltrModel,
    dataset: *const MoltrDataset,
    distill_config_json: *const c_char,
    out: *mut *mut MoltrModel,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let prev = &borrow(previous, "previous")?.inner;
        let ds = &borrow(dataset, "dataset")?.inner;
        let mut cfg = distill_config(distill_config_json, ds.m)?;
        let text = (!distill_config_json.is_null())
            .then(|| string(distill_config_json, "distill_config_json"))
            .transpose()?;
        if !has_key(text, &["train", "mlp"]) {
            cfg.train.mlp.layer_dims = prev.config.layer_dims.clone();
            cfg.train.mlp.activation = prev.config.activation;
        }
        *out = boxed(MoltrModel {
            inner: self_distill_step(prev, ds, &cfg)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_model_load(path: *const c_char, out: *mut *mut MoltrModel) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(MoltrModel {
            inner: Model::load(string(path, "path")?)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_model_save(model: *const MoltrModel, path: *const c_char) -> MoltrStatus {
    guard(|| {
        borrow(model, "model")?.inner.save(string(path, "path")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_model_free(model: *mut MoltrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scores query group `query`. `out_len` must be at least the group size
/// (see `moltr_dataset_query_len`); `written` receives the number of scores.
#[no_mangle]
pub unsafe extern "C" fn moltr_model_score_query(
    model: *const MoltrModel,
    dataset: *const MoltrDataset,
    query: usize,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> MoltrStatus {
    guard(|| {
        let model = &borrow(model, "model")?.inner;
        let ds = &borrow(dataset, "dataset")?.inner;
        let written = out_ptr(written, "written")?;
        let g = ds
            .groups
            .get(query)
            .ok_or_else(|| fail(MoltrStatus::InvalidInput, format!("query {query} out of range")))?;
        *written = g.len();
        if out_len < g.len() {
            return Err(fail(
                MoltrStatus::BufferTooSmall,
                format!("query {query} has {} items, buffer holds {out_len}", g.len()),
            ));
        }
        if out.is_null() {
            return Err(fail(MoltrStatus::NullArgument, "out is NULL"));
        }
        let scores = model.score(&g.features())?;
        std::slice::from_raw_parts_mut(out, scores.len()).copy_from_slice(&scores);
        Ok(())
    })
}

/// Ranking metrics of `model` on `dataset` as a JSON string, released with `moltr_string_free`.
#[no_mangle]
pub unsafe extern "C" fn moltr_model_evaluate_json(
    model: *const MoltrModel,
    dataset: *const MoltrDataset,
    exposure_k: usize,
    out: *mut *mut c_char,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let model = &borrow(model, "model")?.inner;
        let ds = &borrow(dataset, "dataset")?.inner;
        let options = EvalOptions {
            exposure_k,
            boost: None,
        };
        let (report, _) = evaluate_model(model, ds, &options)?;
        let json = serde_json::to_string(&report).map_err(|e| fail(MoltrStatus::Internal, e.to_string()))?;
        *out = CString::new(json)
            .map_err(|e| fail(MoltrStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Raw-score fusion of `num_teachers` teachers. `weights` may be NULL for uniform weights.
#[no_mangle]
pub unsafe extern "C" fn moltr_soft_labels_fuse(
    teachers: *const *const MoltrModel,
    weights: *const f64,
    num_teachers: usize,
    dataset: *const MoltrDataset,
    out: *mut *mut MoltrSoftLabels,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = &borrow(dataset, "dataset")?.inner;
        let handles = slice(teachers, num_teachers, "teachers")?;
        let models = handles
            .iter()
            .map(|&h| borrow(h, "teacher").map(|m| m.inner.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let ens = if weights.is_null() {
            TeacherEnsemble::uniform(models)?
        } else {
            TeacherEnsemble::new(models, slice(weights, num_teachers, "weights")?.to_vec())?
        };
        *out = boxed(MoltrSoftLabels {
            inner: fuse_soft_labels(&ens, ds)?,
        });
        Ok(())
    })
}

/// Adds `beta` to the soft score of items matching the predicate. `rho` is ignored for new items.
#[no_mangle]
pub unsafe extern "C" fn moltr_soft_labels_inject_boost(
    soft_labels: *const MoltrSoftLabels,
    dataset: *const MoltrDataset,
    kind: MoltrBoostKind,
    rho: f64,
    beta: f64,
    out: *mut *mut MoltrSoftLabels,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let soft = &borrow(soft_labels, "soft_labels")?.inner;
        let ds = &borrow(dataset, "dataset")?.inner;
        let predicate = match kind {
            MoltrBoostKind::RatingAtLeast => BoostPredicate::RatingAtLeast { rho },
            MoltrBoostKind::NewItems => BoostPredicate::IsNew,
        };
        *out = boxed(MoltrSoftLabels {
            inner: inject_boost(soft, &BoostRule { predicate, beta }, ds)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_soft_labels_load(path: *const c_char, out: *mut *mut MoltrSoftLabels) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(MoltrSoftLabels {
            inner: SoftLabelSet::load(string(path, "path")?)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_soft_labels_save(
    soft_labels: *const MoltrSoftLabels,
    path: *const c_char,
) -> MoltrStatus {
    guard(|| {
        borrow(soft_labels, "soft_labels")?.inner.save(string(path, "path")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn moltr_soft_labels_free(soft_labels: *mut MoltrSoftLabels) {
    if !soft_labels.is_null() {
        drop(Box::from_raw(soft_labels));
    }
}

/// NDCG@k with binary relevance (`relevant[i] != 0`).
#[no_mangle]
pub unsafe extern "C" fn moltr_ndcg_at_k(
    scores: *const f64,
    relevant: *const u8,
    n: usize,
    k: usize,
    out: *mut f64,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let rel: Vec<bool> = slice(relevant, n, "relevant")?.iter().map(|&r| r != 0).collect();
        *out = ndcg_at_k(slice(scores, n, "scores")?, &rel, k)?;
        Ok(())
    })
}

/// Kendall's tau between two rankings, each a permutation of `0..n` listing items best first.
#[no_mangle]
pub unsafe extern "C" fn moltr_kendall_tau(
    ranking_a: *const usize,
    ranking_b: *const usize,
    n: usize,
    out: *mut f64,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = kendall_tau(slice(ranking_a, n, "ranking_a")?, slice(ranking_b, n, "ranking_b")?)?;
        Ok(())
    })
}

/// Relative prediction difference of two positive prediction vectors.
#[no_mangle]
pub unsafe extern "C" fn moltr_prediction_difference(
    preds_a: *const f64,
    preds_b: *const f64,
    n: usize,
    out: *mut f64,
) -> MoltrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = prediction_difference(slice(preds_a, n, "preds_a")?, slice(preds_b, n, "preds_b")?)?;
        Ok(())
    })
}
