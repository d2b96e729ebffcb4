//! C interface to the eaqa toolkit.
//!
//! Objects are opaque handles created by `*_load` functions and released
//! with the matching `*_free`. Every fallible call returns an
//! [`EaqaStatus`]; on failure a message is available from
//! [`eaqa_last_error`] until the next failing call on the same thread.
//! Strings returned to the caller must be released with
//! [`eaqa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use eaqa::blending::{plan, Decay};
use eaqa::corpus::{corpus_stats, load_corpus, Corpus, LoadOptions, Ontology};
use eaqa::evaluation::{score, EvalReport, PredictionSet};
use eaqa::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EaqaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidInput = 4,
    Protocol = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque event-type ontology.
pub struct EaqaOntology(Ontology);

/// Opaque annotated corpus.
pub struct EaqaCorpus(Corpus);

/// Opaque evaluation report.
pub struct EaqaReport(EvalReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EaqaStats {
    pub documents: usize,
    pub events: usize,
    pub arguments: usize,
    pub intra: usize,
    pub inter: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EaqaScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> EaqaStatus {
    match err {
        Error::Protocol(_) => EaqaStatus::Protocol,
        e if e.is_io() => EaqaStatus::Io,
        _ => EaqaStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (EaqaStatus, String)>) -> EaqaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EaqaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EaqaStatus::Panic
        }
    }
}

fn fail(err: Error) -> (EaqaStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (EaqaStatus, String) {
    (EaqaStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, (EaqaStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| (EaqaStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (EaqaStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eaqa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eaqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn eaqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a tab-separated ontology (`event_type<TAB>role...`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eaqa_ontology_load(path: *const c_char, out: *mut *mut EaqaOntology) -> EaqaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ont = Ontology::load(&path_arg(path, "path")?).map_err(fail)?;
        *out = Box::into_raw(Box::new(EaqaOntology(ont)));
        Ok(())
    })
}

/// # Safety
/// `ontology` must be null or a handle from [`eaqa_ontology_load`].
#[no_mangle]
pub unsafe extern "C" fn eaqa_ontology_free(ontology: *mut EaqaOntology) {
    if !ontology.is_null() {
        drop(Box::from_raw(ontology));
    }
}

/// Load a JSON-lines corpus, validated against `ontology` when it is not null.
///
/// # Safety
/// `path` must be a NUL-terminated string, `ontology` null or a live
/// handle, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eaqa_corpus_load(
    path: *const c_char,
    ontology: *const EaqaOntology,
    out: *mut *mut EaqaCorpus,
) -> EaqaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ont = ontology.as_ref().map(|o| &o.0);
        let corpus = load_corpus(&path_arg(path, "path")?, ont, &LoadOptions::default()).map_err(fail)?;
        *out = Box::into_raw(Box::new(EaqaCorpus(corpus)));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle from [`eaqa_corpus_load`].
#[no_mangle]
pub unsafe extern "C" fn eaqa_corpus_free(corpus: *mut EaqaCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// # Safety
/// `corpus` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eaqa_corpus_stats(corpus: *const EaqaCorpus, out: *mut EaqaStats) -> EaqaStatus {
    guard(|| {
        let corpus = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let out = out_arg(out, "out")?;
        let s = corpus_stats(&corpus.0).map_err(fail)?;
        *out = EaqaStats {
            documents: s.n_documents,
            events: s.n_events,
            arguments: s.n_arguments,
            intra: s.n_intra,
            inter: s.n_inter,
        };
        Ok(())
    })
}

/// Number of additional instances kept in each of `n_epochs` epochs.
/// `out` must have room for `n_epochs` values.
///
/// # Safety
/// `out` must point to at least `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn eaqa_blend_plan(
    alpha: f64,
    n_epochs: usize,
    n_extra: usize,
    geometric: bool,
    out: *mut usize,
    out_len: usize,
) -> EaqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < n_epochs {
            return Err((
                EaqaStatus::BufferTooSmall,
                format!("buffer holds {out_len} values, {n_epochs} needed"),
            ));
        }
        let decay = if geometric { Decay::Geometric } else { Decay::Linear };
        let schedule = plan(alpha, n_epochs, 0, n_extra, decay).map_err(fail)?;
        std::slice::from_raw_parts_mut(out, n_epochs).copy_from_slice(&schedule.per_epoch);
        Ok(())
    })
}

/// Score JSON-lines predictions against `corpus`.
///
/// # Safety
/// `corpus` must be a live handle, `ontology` null or a live handle,
/// `predictions` a NUL-terminated path and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eaqa_score(
    corpus: *const EaqaCorpus,
    predictions: *const c_char,
    ontology: *const EaqaOntology,
    out: *mut *mut EaqaReport,
) -> EaqaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let corpus = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let preds = PredictionSet::load(&path_arg(predictions, "predictions")?).map_err(fail)?;
        let report = score(&corpus.0, &preds, ontology.as_ref().map(|o| &o.0)).map_err(fail)?;
        *out = Box::into_raw(Box::new(EaqaReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eaqa_report_scores(report: *const EaqaReport, out: *mut EaqaScores) -> EaqaStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        *out_arg(out, "out")? = EaqaScores {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            gold: r.n_gold,
            predicted: r.n_predicted,
            correct: r.n_correct,
        };
        Ok(())
    })
}

/// Full report as JSON. Release the string with [`eaqa_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eaqa_report_json(report: *const EaqaReport, out: *mut *mut c_char) -> EaqaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let json = serde_json::to_string(r).map_err(|e| fail(e.into()))?;
        *out = CString::new(json).expect("JSON has no NUL bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle from [`eaqa_score`].
#[no_mangle]
pub unsafe extern "C" fn eaqa_report_free(report: *mut EaqaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
