//! C ABI over `core-kgt`.
//!
//! Datasets and models are opaque heap handles created by `*_load` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`CoreKgtStatus`]; on failure a message is kept per thread and can be
//! read with [`core_kgt_last_error`]. Panics are caught at the boundary and
//! reported as `CORE_KGT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use core_kgt::baseline::{evaluate_baseline, BaselineMode, ConditionalTypeTable};
use core_kgt::dataset::{load_dataset, Dataset, EntityId, LoadOptions, Split, TypeId};
use core_kgt::evaluation::{evaluate, top_types, RankingReport};
use core_kgt::model::{read_checkpoint, CheckpointMeta, CoreModel};
use core_kgt::{Error, ModelKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreKgtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    NotFound = 5,
    Mismatch = 6,
    Checkpoint = 7,
    BufferTooSmall = 8,
    Panic = 9,
    Other = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreKgtSplit {
    Train = 0,
    Valid = 1,
    Test = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreKgtBaseline {
    Sdtype = 0,
    SdtypeCond = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreKgtModelKind {
    Rotate = 0,
    Complex = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoreKgtReport {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub n_queries: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreKgtModelShape {
    pub kind: CoreKgtModelKind,
    pub k: u64,
    pub l: u64,
    pub n_entities: u64,
    pub n_relations: u64,
    pub n_types: u64,
    pub step: u64,
}

/// Opaque loaded dataset.
pub struct CoreKgtDataset {
    inner: Dataset,
}

/// Opaque loaded checkpoint.
pub struct CoreKgtModel {
    model: CoreModel,
    meta: CheckpointMeta,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> CoreKgtStatus {
    match err {
        Error::Io { .. } | Error::MissingFile(_) => CoreKgtStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Config(_) => CoreKgtStatus::Parse,
        Error::EmptySplit(_) | Error::DimensionMismatch { .. } => CoreKgtStatus::InvalidArgument,
        Error::UnknownId { .. } | Error::UnknownName { .. } | Error::UnseenIdentifier { .. } => {
            CoreKgtStatus::NotFound
        }
        Error::VocabMismatch { .. } => CoreKgtStatus::Mismatch,
        Error::Checkpoint(_) => CoreKgtStatus::Checkpoint,
        _ => CoreKgtStatus::Other,
    }
}

struct Fail(CoreKgtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> CoreKgtStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoreKgtStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            set_error(format!("panic: {msg}"));
            CoreKgtStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(CoreKgtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CoreKgtStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn split_of(s: CoreKgtSplit) -> Split {
    match s {
        CoreKgtSplit::Train => Split::Train,
        CoreKgtSplit::Valid => Split::Valid,
        CoreKgtSplit::Test => Split::Test,
    }
}

fn report_of(r: &RankingReport) -> CoreKgtReport {
    CoreKgtReport {
        mrr: r.mrr,
        hits1: r.hits_at(1),
        hits3: r.hits_at(3),
        hits10: r.hits_at(10),
        n_queries: r.n_queries as u64,
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn core_kgt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn core_kgt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads the split files under `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_dataset_load(
    dir: *const c_char,
    out: *mut *mut CoreKgtDataset,
) -> CoreKgtStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        let inner = load_dataset(&dir, &LoadOptions::default())?;
        *out = Box::into_raw(Box::new(CoreKgtDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from `core_kgt_dataset_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_dataset_free(ds: *mut CoreKgtDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live dataset handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_dataset_counts(
    ds: *const CoreKgtDataset,
    n_entities: *mut u64,
    n_relations: *mut u64,
    n_types: *mut u64,
) -> CoreKgtStatus {
    guard(|| {
        let s = &handle(ds, "dataset")?.inner.store;
        for (p, v) in [(n_entities, s.n_entities), (n_relations, s.n_relations), (n_types, s.n_types)] {
            if let Some(p) = p.as_mut() {
                *p = v as u64;
            }
        }
        Ok(())
    })
}

/// Id of the entity called `name`.
///
/// # Safety
/// `ds` must be a live dataset handle, `name` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_entity_id(
    ds: *const CoreKgtDataset,
    name: *const c_char,
    out: *mut u32,
) -> CoreKgtStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let out = out_arg(out, "out")?;
        *out = ds.inner.entity(str_arg(name, "name")?)?.0;
        Ok(())
    })
}

/// Copies the name of type `id` into `buf` (NUL-terminated). `needed`, if
/// non-null, receives the required size including the terminator.
///
/// # Safety
/// `ds` must be a live dataset handle and `buf` valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_type_name(
    ds: *const CoreKgtDataset,
    id: u32,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> CoreKgtStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let name = ds.inner.types.name(id as usize).ok_or(Error::UnknownId {
            kind: "type",
            id: id as usize,
        })?;
        let bytes = name.as_bytes();
        if let Some(n) = needed.as_mut() {
            *n = bytes.len() + 1;
        }
        if buf.is_null() || len < bytes.len() + 1 {
            return Err(Fail(
                CoreKgtStatus::BufferTooSmall,
                format!("type name needs {} bytes", bytes.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
        Ok(())
    })
}

/// Loads a checkpoint and its JSON sidecar.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_model_load(
    path: *const c_char,
    out: *mut *mut CoreKgtModel,
) -> CoreKgtStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = PathBuf::from(str_arg(path, "path")?);
        let (model, meta) = read_checkpoint(&path)?;
        *out = Box::into_raw(Box::new(CoreKgtModel { model, meta }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from `core_kgt_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_model_free(m: *mut CoreKgtModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live model handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_model_shape(
    m: *const CoreKgtModel,
    out: *mut CoreKgtModelShape,
) -> CoreKgtStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let out = out_arg(out, "out")?;
        let s = m.model.shape();
        *out = CoreKgtModelShape {
            kind: match s.kind {
                ModelKind::RotatE => CoreKgtModelKind::Rotate,
                ModelKind::ComplEx => CoreKgtModelKind::Complex,
            },
            k: s.k as u64,
            l: s.l as u64,
            n_entities: s.n_entities as u64,
            n_relations: s.n_relations as u64,
            n_types: s.n_types as u64,
            step: m.meta.step,
        };
        Ok(())
    })
}

/// Regression distance between an entity and a type; lower is a better fit.
///
/// # Safety
/// `m` must be a live model handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_model_score(
    m: *const CoreKgtModel,
    entity: u32,
    ty: u32,
    out: *mut f64,
) -> CoreKgtStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let out = out_arg(out, "out")?;
        *out = m.model.regression_score(EntityId(entity), TypeId(ty))?;
        Ok(())
    })
}

/// Writes up to `n` best types for `entity` in ascending score order.
/// `written` receives the number of entries filled.
///
/// # Safety
/// `types` and `scores` must be valid for `n` elements; `scores` may be null.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_model_predict_top(
    m: *const CoreKgtModel,
    entity: u32,
    n: usize,
    types: *mut u32,
    scores: *mut f64,
    written: *mut usize,
) -> CoreKgtStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let written = out_arg(written, "written")?;
        *written = 0;
        if n > 0 && types.is_null() {
            return Err(null("types"));
        }
        let top = top_types(&m.model, EntityId(entity), n)?;
        for (i, (t, s)) in top.iter().enumerate() {
            *types.add(i) = t.0;
            if !scores.is_null() {
                *scores.add(i) = *s;
            }
        }
        *written = top.len();
        Ok(())
    })
}

/// Filtered ranking of `split`. Fails with `CORE_KGT_STATUS_MISMATCH` if
/// the checkpoint was trained on a different vocabulary.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_evaluate(
    m: *const CoreKgtModel,
    ds: *const CoreKgtDataset,
    split: CoreKgtSplit,
    out: *mut CoreKgtReport,
) -> CoreKgtStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let ds = handle(ds, "dataset")?;
        let out = out_arg(out, "out")?;
        m.meta.check_dataset(&ds.inner)?;
        let store = &ds.inner.store;
        let report = evaluate(store.tp_split(split_of(split)), &m.model, store)?;
        *out = report_of(&report);
        Ok(())
    })
}

/// Fits the counting baseline on train and ranks `split`.
///
/// # Safety
/// `ds` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn core_kgt_baseline_evaluate(
    ds: *const CoreKgtDataset,
    mode: CoreKgtBaseline,
    split: CoreKgtSplit,
    out: *mut CoreKgtReport,
) -> CoreKgtStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let out = out_arg(out, "out")?;
        let store = &ds.inner.store;
        let table = ConditionalTypeTable::fit(store);
        let mode = match mode {
            CoreKgtBaseline::Sdtype => BaselineMode::SdType,
            CoreKgtBaseline::SdtypeCond => BaselineMode::SdTypeCond,
        };
        let report = evaluate_baseline(store.tp_split(split_of(split)), store, &table, mode)?;
        *out = report_of(&report);
        Ok(())
    })
}
