//! Exercises the C ABI from Rust: handle lifecycle, agreement with the
//! underlying library, status codes, and the committed header.

use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use seqdep_ffi::*;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sdm_last_error()).to_string_lossy().into_owned() }
}

/// Build the toy index through the ABI, panicking on failure.
fn toy_handle() -> *mut SdmIndex {
    let corpus = cpath(&data("toy/corpus.jsonl"));
    let mut idx: *mut SdmIndex = ptr::null_mut();
    let st = unsafe { sdm_index_build_jsonl(corpus.as_ptr(), 0, &mut idx) };
    assert_eq!(st, SdmStatus::Ok, "build failed: {}", last_error());
    assert!(!idx.is_null());
    idx
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(sdm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn build_save_open_roundtrip() {
    let idx = toy_handle();
    unsafe {
        assert_eq!(sdm_index_doc_count(idx), 12);
        assert_eq!(sdm_index_coll_tokens(idx), 121);
        assert_eq!(sdm_index_window(idx), 8);

        let dir = tempfile::tempdir().unwrap();
        let path = cpath(&dir.path().join("toy.idx"));
        assert_eq!(sdm_index_save(idx, path.as_ptr()), SdmStatus::Ok);

        let mut reopened: *mut SdmIndex = ptr::null_mut();
        assert_eq!(sdm_index_open(path.as_ptr(), &mut reopened), SdmStatus::Ok);
        assert_eq!(sdm_index_doc_count(reopened), 12);
        assert_eq!(sdm_index_coll_tokens(reopened), 121);
        sdm_index_free(reopened);
        sdm_index_free(idx);
    }
}

#[test]
fn score_agrees_with_the_library() {
    use seqdep::corpus::load_corpus;
    use seqdep::index::{NormalizerMode, PositionalIndex, DEFAULT_WINDOW};
    use seqdep::lm::SmoothingParams;
    use seqdep::pipeline::PipelineConfig;
    use seqdep::scorer::{score, ScorerSpec, StopwordSet};

    let docs = load_corpus(
        &data("toy/corpus.jsonl"),
        seqdep::corpus::CorpusFormat::Jsonl,
        &PipelineConfig::default(),
    )
    .unwrap();
    let reference = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
    let mu = SmoothingParams::new(10.0, 5.0, 20.0, NormalizerMode::Exact).unwrap();
    let expected = score(
        &reference,
        &["lava".to_string()],
        "volcano1",
        &ScorerSpec::ql(mu),
        &StopwordSet::new(),
    )
    .unwrap();

    let idx = toy_handle();
    let model = cstr("QL");
    let query = cstr("lava");
    let doc = cstr("volcano1");
    let mu_c = [10.0f64, 5.0, 20.0];
    let mut got = f64::NAN;
    let st = unsafe {
        sdm_score(
            idx,
            model.as_ptr(),
            query.as_ptr(),
            ptr::null(),
            ptr::null(),
            mu_c.as_ptr(),
            ptr::null(),
            ptr::null(),
            doc.as_ptr(),
            &mut got,
        )
    };
    assert_eq!(st, SdmStatus::Ok, "{}", last_error());
    assert_eq!(got.to_bits(), expected.to_bits(), "{got} vs {expected}");
    unsafe { sdm_index_free(idx) };
}

#[test]
fn excluded_document_scores_negative_infinity() {
    // the query bigram never occurs in the collection, so the weighted
    // model has no event to score and rules the document out
    let idx = toy_handle();
    let model = cstr("mrfSDM");
    let query = cstr("lava ash");
    let doc = cstr("volcano1");
    let lambda = [0.8f64, 0.1, 0.1];
    let mut got = f64::NAN;
    let st = unsafe {
        sdm_score(
            idx,
            model.as_ptr(),
            query.as_ptr(),
            lambda.as_ptr(),
            ptr::null(),
            ptr::null(),
            ptr::null(),
            ptr::null(),
            doc.as_ptr(),
            &mut got,
        )
    };
    assert_eq!(st, SdmStatus::Ok, "{}", last_error());
    assert!(got.is_infinite() && got < 0.0, "got {got}");
    unsafe { sdm_index_free(idx) };
}

#[test]
fn rank_agrees_with_the_library() {
    use seqdep::corpus::{load_corpus, Query};
    use seqdep::index::{NormalizerMode, PositionalIndex, DEFAULT_WINDOW};
    use seqdep::lm::SmoothingParams;
    use seqdep::pipeline::{tokenize, PipelineConfig};
    use seqdep::scorer::{rank_query, MixtureWeights, ScorerKind, ScorerSpec, StopwordSet};

    let pipe = PipelineConfig::default();
    let docs = load_corpus(
        &data("toy/corpus.jsonl"),
        seqdep::corpus::CorpusFormat::Jsonl,
        &pipe,
    )
    .unwrap();
    let reference = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
    let mu = SmoothingParams::new(10.0, 5.0, 20.0, NormalizerMode::Exact).unwrap();
    let spec = ScorerSpec::with_lambda(
        ScorerKind::GenSdm,
        MixtureWeights::new(0.8, 0.1, 0.1),
        mu,
    );
    let expected = rank_query(
        &reference,
        &Query {
            query_id: "q".to_string(),
            terms: tokenize("steam engine", &pipe),
        },
        &spec,
        1000,
        &StopwordSet::new(),
    )
    .unwrap();
    assert!(!expected.entries.is_empty());

    let idx = toy_handle();
    let model = cstr("genSDM");
    let query = cstr("steam engine");
    let lambda = [0.8f64, 0.1, 0.1];
    let mu_c = [10.0f64, 5.0, 20.0];
    let mut ranking: *mut SdmRanking = ptr::null_mut();
    let st = unsafe {
        sdm_rank(
            idx,
            model.as_ptr(),
            query.as_ptr(),
            lambda.as_ptr(),
            ptr::null(),
            mu_c.as_ptr(),
            ptr::null(),
            ptr::null(),
            0,
            &mut ranking,
        )
    };
    assert_eq!(st, SdmStatus::Ok, "{}", last_error());
    unsafe {
        let n = sdm_ranking_len(ranking);
        assert_eq!(n, expected.entries.len());
        for (i, (id, score)) in expected.entries.iter().enumerate() {
            let got_id = CStr::from_ptr(sdm_ranking_doc_id(ranking, i));
            assert_eq!(got_id.to_str().unwrap(), id, "position {i}");
            assert_eq!(sdm_ranking_score(ranking, i).to_bits(), score.to_bits());
        }
        // out-of-range accessors degrade, they do not crash
        assert!(sdm_ranking_doc_id(ranking, n).is_null());
        assert!(sdm_ranking_score(ranking, n).is_nan());
        sdm_ranking_free(ranking);
        sdm_index_free(idx);
    }
}

#[test]
fn empty_query_ranks_empty() {
    let idx = toy_handle();
    let model = cstr("QL");
    // stopword-only text tokenizes to nothing worth ranking
    let query = cstr("...");
    let mut ranking: *mut SdmRanking = ptr::null_mut();
    let st = unsafe {
        sdm_rank(
            idx,
            model.as_ptr(),
            query.as_ptr(),
            ptr::null(),
            ptr::null(),
            ptr::null(),
            ptr::null(),
            ptr::null(),
            0,
            &mut ranking,
        )
    };
    assert_eq!(st, SdmStatus::Ok, "{}", last_error());
    unsafe {
        assert_eq!(sdm_ranking_len(ranking), 0);
        sdm_ranking_free(ranking);
        sdm_index_free(idx);
    }
}

#[test]
fn failures_report_status_and_message() {
    unsafe {
        // missing file is a data problem
        let mut idx: *mut SdmIndex = ptr::null_mut();
        let missing = cstr("/no/such/corpus.jsonl");
        assert_eq!(
            sdm_index_build_jsonl(missing.as_ptr(), 0, &mut idx),
            SdmStatus::DataError
        );
        assert!(last_error().contains("corpus.jsonl"), "message: {}", last_error());
        assert!(idx.is_null());

        // null pointers and bad names are caller mistakes
        assert_eq!(
            sdm_index_build_jsonl(ptr::null(), 0, &mut idx),
            SdmStatus::InvalidArgument
        );
        let handle = toy_handle();
        let query = cstr("lava");
        let doc = cstr("volcano1");
        let mut out = 0.0f64;
        let bogus = cstr("bogusModel");
        assert_eq!(
            sdm_score(
                handle,
                bogus.as_ptr(),
                query.as_ptr(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                doc.as_ptr(),
                &mut out,
            ),
            SdmStatus::InvalidArgument
        );
        assert!(last_error().contains("bogusModel"), "message: {}", last_error());

        // invalid UTF-8 in a string argument
        let bad_bytes: [c_char; 2] = [-1i8 as c_char, 0];
        let model = cstr("QL");
        assert_eq!(
            sdm_score(
                handle,
                model.as_ptr(),
                bad_bytes.as_ptr(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                doc.as_ptr(),
                &mut out,
            ),
            SdmStatus::InvalidArgument
        );

        // unknown document id is a data problem
        let ghost = cstr("no-such-doc");
        assert_eq!(
            sdm_score(
                handle,
                model.as_ptr(),
                query.as_ptr(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ghost.as_ptr(),
                &mut out,
            ),
            SdmStatus::DataError
        );
        sdm_index_free(handle);
    }
}

#[test]
fn stats_tsv_is_caller_owned() {
    let idx = toy_handle();
    let mut text: *mut c_char = ptr::null_mut();
    let st = unsafe { sdm_index_stats_tsv(idx, &mut text) };
    assert_eq!(st, SdmStatus::Ok, "{}", last_error());
    let owned = unsafe { CStr::from_ptr(text).to_string_lossy().into_owned() };
    assert!(owned.starts_with("meta\twindow\t8\n"), "stats: {owned}");
    assert!(owned.contains("meta\tdoc_count\t12\n"));
    unsafe {
        sdm_string_free(text);
        sdm_index_free(idx);
    }
}

#[test]
fn committed_header_covers_the_surface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/seqdep.h");
    let text = std::fs::read_to_string(&header).expect("include/seqdep.h is committed");
    for symbol in [
        "typedef enum SdmStatus",
        "SDM_STATUS_INVALID_ARGUMENT",
        "typedef struct SdmIndex SdmIndex",
        "typedef struct SdmRanking SdmRanking",
        "sdm_index_build_jsonl",
        "sdm_index_open",
        "sdm_index_save",
        "sdm_index_free",
        "sdm_score",
        "sdm_rank",
        "sdm_ranking_doc_id",
        "sdm_ranking_free",
        "sdm_string_free",
        "sdm_last_error",
        "sdm_version",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }
}
