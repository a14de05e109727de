//! C ABI for numtok.
//!
//! Every fallible function returns an [`NtkStatus`]. On failure the message
//! is available from [`ntk_last_error`] on the same thread until the next
//! call. Objects come back as opaque handles that the caller releases with
//! the matching `_free` function. Structured inputs and outputs are JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use numtok::api::{self, EncoderSpec, StepInput};
use numtok::curriculum::SchedulerState;
use numtok::encoders::EmbeddingMatrix;
use numtok::numeric::Radix;
use numtok::taskgen::Task;
use numtok::Error;
use serde::Deserialize;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NtkStatus {
    Ok = 0,
    InvalidArgument = 1,
    Io = 2,
    Json = 3,
    Schema = 4,
    Format = 5,
    Diverged = 6,
    RejectionExhausted = 7,
    NullPointer = 8,
    Utf8 = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Encoded numbers, one `f32` row per value.
pub struct NtkMatrix(EmbeddingMatrix);

/// Owned byte string (JSONL, JSON or NTKE bytes).
pub struct NtkBuffer(Vec<u8>);

/// Curriculum and task-ratio scheduler.
pub struct NtkScheduler(SchedulerState);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(NtkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => NtkStatus::InvalidArgument,
            Error::Io { .. } => NtkStatus::Io,
            Error::Json { .. } => NtkStatus::Json,
            Error::Schema(_) => NtkStatus::Schema,
            Error::Format(_) => NtkStatus::Format,
            Error::Diverged { .. } => NtkStatus::Diverged,
            Error::RejectionExhausted(_) => NtkStatus::RejectionExhausted,
        };
        Failure(code, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(NtkStatus::Json, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NtkStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NtkStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            NtkStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NtkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NtkStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next numtok call on this thread.
#[no_mangle]
pub extern "C" fn ntk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ntk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Encode `n` values. `spec_json` is an encoder spec such as
/// `{"scheme": "bittoken", "d_model": 768}`.
///
/// # Safety
/// `values` must point to `n` doubles; `spec_json` must be a NUL-terminated
/// string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_encode_batch(
    values: *const f64,
    n: usize,
    spec_json: *const c_char,
    out: *mut *mut NtkMatrix,
) -> NtkStatus {
    guard(|| {
        let values = slice(values, n, "values")?;
        let spec: EncoderSpec = serde_json::from_str(text(spec_json, "spec_json")?)?;
        put(out, NtkMatrix(api::encode_batch(values, &spec)?))
    })
}

/// Decode every row of `m` into `out_values`, which holds `capacity`
/// doubles and must have room for one per row.
///
/// # Safety
/// `m` must be a live matrix handle; `out_values` must point to `capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ntk_decode_batch(
    m: *const NtkMatrix,
    spec_json: *const c_char,
    out_values: *mut f64,
    capacity: usize,
) -> NtkStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        let spec: EncoderSpec = serde_json::from_str(text(spec_json, "spec_json")?)?;
        if capacity < m.0.rows {
            return Err(Failure(
                NtkStatus::BufferTooSmall,
                format!("need room for {} values, got {capacity}", m.0.rows),
            ));
        }
        if out_values.is_null() {
            return Err(null("out_values"));
        }
        let decoded = api::decode_batch(&m.0, &spec)?;
        std::ptr::copy_nonoverlapping(decoded.as_ptr(), out_values, decoded.len());
        Ok(())
    })
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// # Safety
/// `m` must be a live matrix handle or null.
#[no_mangle]
pub unsafe extern "C" fn ntk_matrix_rows(m: *const NtkMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows)
}

/// # Safety
/// `m` must be a live matrix handle or null.
#[no_mangle]
pub unsafe extern "C" fn ntk_matrix_dims(m: *const NtkMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.dims)
}

/// Row-major `rows * dims` floats, valid while the handle lives.
///
/// # Safety
/// `m` must be a live matrix handle or null.
#[no_mangle]
pub unsafe extern "C" fn ntk_matrix_data(m: *const NtkMatrix) -> *const f32 {
    m.as_ref().map_or(std::ptr::null(), |m| m.0.data.as_ptr())
}

/// Serialize to NTKE bytes.
///
/// # Safety
/// `m` must be a live matrix handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_matrix_to_ntke(m: *const NtkMatrix, out: *mut *mut NtkBuffer) -> NtkStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        put(out, NtkBuffer(m.0.to_bytes()))
    })
}

/// Parse NTKE bytes.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_matrix_from_ntke(bytes: *const u8, len: usize, out: *mut *mut NtkMatrix) -> NtkStatus {
    guard(|| {
        let b = slice(bytes, len, "bytes")?;
        put(out, NtkMatrix(EmbeddingMatrix::from_bytes(b)?))
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ntk_matrix_free(m: *mut NtkMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dataset JSONL, header line first. `base` is 2 or 10.
///
/// # Safety
/// `task` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_generate_dataset(
    seed: u64,
    task: *const c_char,
    n: usize,
    shards: usize,
    base: u32,
    out: *mut *mut NtkBuffer,
) -> NtkStatus {
    guard(|| {
        let task: Task = text(task, "task")?.parse()?;
        let bytes = api::generate_dataset(seed, task, n, shards, Radix::from_base(base)?)?;
        put(out, NtkBuffer(bytes))
    })
}

/// Score report JSON for a predictions file against a reference dataset.
///
/// # Safety
/// Both paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_score_file(
    pred_path: *const c_char,
    ref_path: *const c_char,
    out: *mut *mut NtkBuffer,
) -> NtkStatus {
    guard(|| {
        let pred = text(pred_path, "pred_path")?;
        let reference = text(ref_path, "ref_path")?;
        let report = api::score_file(Path::new(pred), Path::new(reference))?;
        put(out, NtkBuffer(report.to_json().into_bytes()))
    })
}

/// # Safety
/// `b` must be a live buffer handle or null.
#[no_mangle]
pub unsafe extern "C" fn ntk_buffer_data(b: *const NtkBuffer) -> *const u8 {
    b.as_ref().map_or(std::ptr::null(), |b| b.0.as_ptr())
}

/// # Safety
/// `b` must be a live buffer handle or null.
#[no_mangle]
pub unsafe extern "C" fn ntk_buffer_len(b: *const NtkBuffer) -> usize {
    b.as_ref().map_or(0, |b| b.0.len())
}

/// # Safety
/// `b` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ntk_buffer_free(b: *mut NtkBuffer) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

#[derive(Deserialize)]
struct TaskLimit {
    task: Task,
    max_difficulty: u32,
}

#[derive(Deserialize)]
struct SchedulerConfig {
    tasks: Vec<TaskLimit>,
    total_steps: u64,
    lr_max: f64,
    lr_half: f64,
}

/// New scheduler from
/// `{"tasks": [{"task": "mult", "max_difficulty": 12}], "total_steps": N,
/// "lr_max": a, "lr_half": b}`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_scheduler_new(config_json: *const c_char, out: *mut *mut NtkScheduler) -> NtkStatus {
    guard(|| {
        let c: SchedulerConfig = serde_json::from_str(text(config_json, "config_json")?)?;
        let tasks: Vec<(Task, u32)> = c.tasks.iter().map(|t| (t.task, t.max_difficulty)).collect();
        put(out, NtkScheduler(SchedulerState::new(&tasks, c.total_steps, c.lr_max, c.lr_half)?))
    })
}

/// Restore a scheduler from a checkpoint written by
/// [`ntk_scheduler_checkpoint`].
///
/// # Safety
/// `checkpoint_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_scheduler_restore(checkpoint_json: *const c_char, out: *mut *mut NtkScheduler) -> NtkStatus {
    guard(|| {
        let s: SchedulerState = serde_json::from_str(text(checkpoint_json, "checkpoint_json")?)?;
        put(out, NtkScheduler(s))
    })
}

/// Full scheduler state as JSON.
///
/// # Safety
/// `s` must be a live scheduler handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_scheduler_checkpoint(s: *const NtkScheduler, out: *mut *mut NtkBuffer) -> NtkStatus {
    guard(|| {
        let s = handle(s, "scheduler")?;
        put(out, NtkBuffer(serde_json::to_vec(&s.0)?))
    })
}

/// One scheduler step. Input and output are JSON step records
/// (`step`, `lr`, `measurements`, `task_performance`, `batch_tokens`,
/// `seed` in; `advanced`, `ratios`, `plan` out). The state is unchanged
/// when the call fails.
///
/// # Safety
/// `s` must be a live scheduler handle; `input_json` must be a
/// NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ntk_scheduler_step(
    s: *mut NtkScheduler,
    input_json: *const c_char,
    out: *mut *mut NtkBuffer,
) -> NtkStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("scheduler"))?;
        let input: StepInput = serde_json::from_str(text(input_json, "input_json")?)?;
        let mut next = s.0.clone();
        let result = api::scheduler_step(&mut next, &input)?;
        let bytes = serde_json::to_vec(&result)?;
        put(out, NtkBuffer(bytes))?;
        s.0 = next;
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ntk_scheduler_free(s: *mut NtkScheduler) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
