//! C ABI over the retrieval library: opaque handles, integer status codes,
//! and a thread-local error message. The committed header lives at
//! include/seqdep.h and is regenerated by the build script.
//!
//! Conventions: every fallible call returns an `SdmStatus`; out-parameters
//! are written only on `SDM_STATUS_OK`; `sdm_last_error` describes the most
//! recent failure on the calling thread. Pointers returned by accessors
//! borrow from their handle and die with it; strings returned through
//! `char **` out-parameters are owned by the caller and must be released
//! with `sdm_string_free`. No call unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use seqdep::corpus::{load_corpus, CorpusFormat, Query};
use seqdep::error::Error;
use seqdep::index::{NormalizerMode, PositionalIndex, DEFAULT_WINDOW};
use seqdep::lm::SmoothingParams;
use seqdep::pipeline::{load_stopwords, tokenize, PipelineConfig};
use seqdep::scorer::{
    rank_query, score, JMWeights, MixtureWeights, ScorerKind, ScorerSpec, StopwordSet,
    DEFAULT_CANDIDATE_K,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdmStatus {
    /// Success; out-parameters are valid.
    Ok = 0,
    /// A caller mistake: null pointer, malformed UTF-8, unknown model or
    /// mode name, or parameter values outside their domain.
    InvalidArgument = 1,
    /// The inputs could not be processed: missing or malformed files,
    /// unknown document ids, empty collections.
    DataError = 2,
    /// An internal invariant failed; the library state is unharmed but the
    /// call did nothing.
    Panic = 3,
}

/// Opaque positional index handle. Build or open one, share it freely
/// across threads for reading, and release it with `sdm_index_free`.
pub struct SdmIndex {
    inner: PositionalIndex,
}

/// Opaque ranked result list for one query, ordered by descending score
/// with ties broken by document id.
pub struct SdmRanking {
    ids: Vec<CString>,
    scores: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let clean = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(e: &Error) -> SdmStatus {
    match e {
        Error::InvalidParam(_) => SdmStatus::InvalidArgument,
        _ => SdmStatus::DataError,
    }
}

fn guarded(f: impl FnOnce() -> Result<(), Error>) -> SdmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdmStatus::Ok,
        Ok(Err(e)) => {
            let status = status_of(&e);
            set_error(e.to_string());
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            SdmStatus::Panic
        }
    }
}

fn null_arg(name: &str) -> Error {
    Error::InvalidParam(format!("{name} must not be null"))
}

unsafe fn req_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidParam(format!("{name} is not valid UTF-8")))
}

unsafe fn req_index<'a>(p: *const SdmIndex) -> Result<&'a PositionalIndex, Error> {
    if p.is_null() {
        return Err(null_arg("index"));
    }
    Ok(&(*p).inner)
}

/// Scorer assembly shared by `sdm_score` and `sdm_rank`. Null optional
/// pointers fall back to the library defaults: lambda (0.8, 0.1, 0.1),
/// JM weights (0.8, 0.9), Dirichlet scales (1, 1, 1), exact normalizers.
unsafe fn build_spec(
    model: *const c_char,
    lambda: *const f64,
    jm: *const f64,
    mu: *const f64,
    mode: *const c_char,
) -> Result<ScorerSpec, Error> {
    let kind: ScorerKind = req_str(model, "model")?.parse()?;
    let mode: NormalizerMode = if mode.is_null() {
        NormalizerMode::Exact
    } else {
        req_str(mode, "mode")?.parse()?
    };
    let smoothing = if mu.is_null() {
        SmoothingParams::new(1.0, 1.0, 1.0, mode)?
    } else {
        SmoothingParams::new(*mu, *mu.add(1), *mu.add(2), mode)?
    };
    let spec = match kind {
        ScorerKind::Ql => ScorerSpec::ql(smoothing),
        ScorerKind::Jm => {
            let jm = if jm.is_null() {
                JMWeights::new(0.8, 0.9)
            } else {
                JMWeights::new(*jm, *jm.add(1))
            };
            ScorerSpec::jm(jm, smoothing)
        }
        _ => {
            let lambda = if lambda.is_null() {
                MixtureWeights::new(0.8, 0.1, 0.1)
            } else {
                MixtureWeights::new(*lambda, *lambda.add(1), *lambda.add(2))
            };
            ScorerSpec::with_lambda(kind, lambda, smoothing)
        }
    };
    spec.validate()?;
    Ok(spec)
}

unsafe fn build_stopwords(path: *const c_char) -> Result<StopwordSet, Error> {
    if path.is_null() {
        return Ok(StopwordSet::new());
    }
    load_stopwords(Path::new(req_str(path, "stopwords_path")?), &PipelineConfig::default())
}

/// Library version as a static NUL-terminated string; never free it.
#[no_mangle]
pub extern "C" fn sdm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread, empty if none.
/// The pointer stays valid until the next failing call on the same thread;
/// never free it.
#[no_mangle]
pub extern "C" fn sdm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Tokenize a JSONL corpus ({"id", "text"} per line) through the default
/// text pipeline and build an index over it. `window` 0 selects the default
/// co-occurrence width of 8. On success `*out_index` owns the handle.
#[no_mangle]
pub unsafe extern "C" fn sdm_index_build_jsonl(
    corpus_path: *const c_char,
    window: u32,
    out_index: *mut *mut SdmIndex,
) -> SdmStatus {
    guarded(|| unsafe {
        if out_index.is_null() {
            return Err(null_arg("out_index"));
        }
        let path = req_str(corpus_path, "corpus_path")?;
        let window = if window == 0 { DEFAULT_WINDOW } else { window };
        let docs = load_corpus(Path::new(path), CorpusFormat::Jsonl, &PipelineConfig::default())?;
        let inner = PositionalIndex::build(docs, window)?;
        *out_index = Box::into_raw(Box::new(SdmIndex { inner }));
        Ok(())
    })
}

/// Open an index previously written by `sdm_index_save` (or the CLI).
#[no_mangle]
pub unsafe extern "C" fn sdm_index_open(
    index_path: *const c_char,
    out_index: *mut *mut SdmIndex,
) -> SdmStatus {
    guarded(|| unsafe {
        if out_index.is_null() {
            return Err(null_arg("out_index"));
        }
        let path = req_str(index_path, "index_path")?;
        let inner = PositionalIndex::load(Path::new(path))?;
        *out_index = Box::into_raw(Box::new(SdmIndex { inner }));
        Ok(())
    })
}

/// Serialize the index to a file that `sdm_index_open` can read back.
#[no_mangle]
pub unsafe extern "C" fn sdm_index_save(
    index: *const SdmIndex,
    index_path: *const c_char,
) -> SdmStatus {
    guarded(|| unsafe {
        let idx = req_index(index)?;
        idx.save(Path::new(req_str(index_path, "index_path")?))
    })
}

/// Release an index handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sdm_index_free(index: *mut SdmIndex) {
    if !index.is_null() {
        drop(unsafe { Box::from_raw(index) });
    }
}

/// Number of indexed documents; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sdm_index_doc_count(index: *const SdmIndex) -> u64 {
    if index.is_null() {
        return 0;
    }
    unsafe { (*index).inner.doc_count() as u64 }
}

/// Total tokens across the collection; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sdm_index_coll_tokens(index: *const SdmIndex) -> u64 {
    if index.is_null() {
        return 0;
    }
    unsafe { (*index).inner.coll_tokens() }
}

/// Co-occurrence window width the index was built with; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn sdm_index_window(index: *const SdmIndex) -> u32 {
    if index.is_null() {
        return 0;
    }
    unsafe { (*index).inner.window() }
}

/// Full index statistics as TSV text. On success `*out_tsv` is a fresh
/// NUL-terminated string owned by the caller; release it with
/// `sdm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sdm_index_stats_tsv(
    index: *const SdmIndex,
    out_tsv: *mut *mut c_char,
) -> SdmStatus {
    guarded(|| unsafe {
        if out_tsv.is_null() {
            return Err(null_arg("out_tsv"));
        }
        let idx = req_index(index)?;
        let text = CString::new(idx.dump_stats())
            .map_err(|_| Error::InvalidParam("stats contain a NUL byte".to_string()))?;
        *out_tsv = text.into_raw();
        Ok(())
    })
}

/// Release a string returned through a `char **` out-parameter.
/// Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sdm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Score one document for a query under the named model.
///
/// `model` is one of QL, mrfSDM, genSDM, genNGram, mrfNGram, JM. `query`
/// is raw text run through the same pipeline as the documents. `lambda`
/// points at three mixture weights, `jm` at two nested weights, `mu` at
/// three Dirichlet scales; each may be null to take the default. `mode` is
/// "exact" or "galago_approx" (null for exact), `stopwords_path` an optional
/// stopword file. The score is a natural-log value; `-inf` means the model
/// excludes the document (a weighted component with no possible event).
#[no_mangle]
pub unsafe extern "C" fn sdm_score(
    index: *const SdmIndex,
    model: *const c_char,
    query: *const c_char,
    lambda: *const f64,
    jm: *const f64,
    mu: *const f64,
    mode: *const c_char,
    stopwords_path: *const c_char,
    doc_id: *const c_char,
    out_score: *mut f64,
) -> SdmStatus {
    guarded(|| unsafe {
        if out_score.is_null() {
            return Err(null_arg("out_score"));
        }
        let idx = req_index(index)?;
        let spec = build_spec(model, lambda, jm, mu, mode)?;
        let stop = build_stopwords(stopwords_path)?;
        let terms = tokenize(req_str(query, "query")?, &PipelineConfig::default());
        let doc = req_str(doc_id, "doc_id")?;
        *out_score = score(idx, &terms, doc, &spec, &stop)?;
        Ok(())
    })
}

/// Rank documents for a query under the named model; parameters as in
/// `sdm_score`. `k` bounds the candidate pool (0 for the default of 1000).
/// Documents the model excludes are absent from the result. An empty query
/// yields an empty ranking, not an error. On success `*out_ranking` owns
/// the handle; release it with `sdm_ranking_free`.
#[no_mangle]
pub unsafe extern "C" fn sdm_rank(
    index: *const SdmIndex,
    model: *const c_char,
    query: *const c_char,
    lambda: *const f64,
    jm: *const f64,
    mu: *const f64,
    mode: *const c_char,
    stopwords_path: *const c_char,
    k: usize,
    out_ranking: *mut *mut SdmRanking,
) -> SdmStatus {
    guarded(|| unsafe {
        if out_ranking.is_null() {
            return Err(null_arg("out_ranking"));
        }
        let idx = req_index(index)?;
        let spec = build_spec(model, lambda, jm, mu, mode)?;
        let stop = build_stopwords(stopwords_path)?;
        let query = Query {
            query_id: "ffi".to_string(),
            terms: tokenize(req_str(query, "query")?, &PipelineConfig::default()),
        };
        let k = if k == 0 { DEFAULT_CANDIDATE_K } else { k };
        let ranking = rank_query(idx, &query, &spec, k, &stop)?;
        let mut ids = Vec::with_capacity(ranking.entries.len());
        let mut scores = Vec::with_capacity(ranking.entries.len());
        for (id, s) in ranking.entries {
            ids.push(
                CString::new(id)
                    .map_err(|_| Error::InvalidParam("doc id contains a NUL byte".to_string()))?,
            );
            scores.push(s);
        }
        *out_ranking = Box::into_raw(Box::new(SdmRanking { ids, scores }));
        Ok(())
    })
}

/// Number of documents in the ranking; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sdm_ranking_len(ranking: *const SdmRanking) -> usize {
    if ranking.is_null() {
        return 0;
    }
    unsafe { (*ranking).ids.len() }
}

/// Document id at position `i` (0-based, best first). The pointer borrows
/// from the ranking handle; null when `i` is out of range.
#[no_mangle]
pub unsafe extern "C" fn sdm_ranking_doc_id(
    ranking: *const SdmRanking,
    i: usize,
) -> *const c_char {
    if ranking.is_null() {
        return ptr::null();
    }
    match unsafe { (&(*ranking).ids).get(i) } {
        Some(s) => s.as_ptr(),
        None => ptr::null(),
    }
}

/// Score at position `i`; NaN when `i` is out of range.
#[no_mangle]
pub unsafe extern "C" fn sdm_ranking_score(ranking: *const SdmRanking, i: usize) -> f64 {
    if ranking.is_null() {
        return f64::NAN;
    }
    unsafe { (&(*ranking).scores).get(i).copied().unwrap_or(f64::NAN) }
}

/// Release a ranking handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sdm_ranking_free(ranking: *mut SdmRanking) {
    if !ranking.is_null() {
        drop(unsafe { Box::from_raw(ranking) });
    }
}
