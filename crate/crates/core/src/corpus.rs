//! Corpus, query, judgment, and fold file ingestion.
//!
//! Formats (all UTF-8):
//!   corpus  — JSONL `{"id": "...", "text": "..."}` per line, or minimal
//!             TRECTEXT (`<DOC>`, `<DOCNO>`, `<TEXT>` elements only)
//!   queries — TSV `qid<TAB>query text`
//!   qrels   — `qid 0 docid grade`, whitespace separated
//!   folds   — `qid fold` per line

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pipeline::{tokenize, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Trectext,
}

impl CorpusFormat {
    /// `.jsonl`/`.json` → Jsonl, anything else → Trectext.
    pub fn sniff(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Trectext,
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    text: String,
}

/// Documents in file order, tokenized; duplicate ids rejected.
pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    cfg: &PipelineConfig,
) -> Result<Vec<TokenizedDoc>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let docs = match format {
        CorpusFormat::Jsonl => parse_jsonl(path, &text, cfg)?,
        CorpusFormat::Trectext => parse_trectext(path, &text, cfg)?,
    };
    let mut seen = BTreeSet::new();
    for d in &docs {
        if d.doc_id.is_empty() {
            return Err(Error::MalformedRecord {
                path: path.to_path_buf(),
                offset: 0,
                ordinal: seen.len(),
                msg: "empty doc id".into(),
            });
        }
        if !seen.insert(d.doc_id.clone()) {
            return Err(Error::DuplicateDocId {
                doc_id: d.doc_id.clone(),
            });
        }
    }
    Ok(docs)
}

fn parse_jsonl(path: &Path, text: &str, cfg: &PipelineConfig) -> Result<Vec<TokenizedDoc>> {
    let mut docs = Vec::new();
    let mut offset = 0u64;
    for (ordinal, line) in text.split('\n').enumerate() {
        let line_len = line.len() as u64 + 1;
        if !line.trim().is_empty() {
            let rec: JsonRecord =
                serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                    path: path.to_path_buf(),
                    offset,
                    ordinal: docs.len(),
                    msg: format!("line {}: {e}", ordinal + 1),
                })?;
            docs.push(TokenizedDoc {
                doc_id: rec.id,
                tokens: tokenize(&rec.text, cfg),
            });
        }
        offset += line_len;
    }
    Ok(docs)
}

/// Minimal TRECTEXT scanner: <DOC> blocks containing one <DOCNO> and one or
/// more <TEXT> elements; everything outside those tags is ignored.
fn parse_trectext(path: &Path, text: &str, cfg: &PipelineConfig) -> Result<Vec<TokenizedDoc>> {
    let mut docs = Vec::new();
    let mut pos = 0usize;
    let malformed = |offset: usize, ordinal: usize, msg: &str| Error::MalformedRecord {
        path: path.to_path_buf(),
        offset: offset as u64,
        ordinal,
        msg: msg.into(),
    };
    while let Some(start_rel) = text[pos..].find("<DOC>") {
        let doc_start = pos + start_rel;
        let doc_end = text[doc_start..]
            .find("</DOC>")
            .map(|e| doc_start + e)
            .ok_or_else(|| malformed(doc_start, docs.len(), "unterminated <DOC>"))?;
        let block = &text[doc_start..doc_end];

        let docno = extract_element(block, "DOCNO")
            .ok_or_else(|| malformed(doc_start, docs.len(), "missing <DOCNO>"))?;
        let mut tokens = Vec::new();
        let mut search = 0usize;
        let mut saw_text = false;
        while let Some(t) = extract_element_from(block, "TEXT", &mut search) {
            saw_text = true;
            tokens.extend(tokenize(t, cfg));
        }
        if !saw_text {
            return Err(malformed(doc_start, docs.len(), "missing <TEXT>"));
        }
        docs.push(TokenizedDoc {
            doc_id: docno.trim().to_string(),
            tokens,
        });
        pos = doc_end + "</DOC>".len();
    }
    Ok(docs)
}

fn extract_element<'a>(block: &'a str, tag: &str) -> Option<&'a str> {
    let mut search = 0usize;
    extract_element_from(block, tag, &mut search)
}

fn extract_element_from<'a>(block: &'a str, tag: &str, search: &mut usize) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let s = block[*search..].find(&open)? + *search + open.len();
    let e = block[s..].find(&close)? + s;
    *search = e + close.len();
    Some(&block[s..e])
}

// ---------------------------------------------------------------------------
// Judgments

/// (query_id, doc_id) → relevance grade.  Grade > 0 counts as relevant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    pub judgments: BTreeMap<(String, String), u32>,
}

impl Qrels {
    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments
            .get(&(query_id.to_string(), doc_id.to_string()))
            .copied()
    }

    /// Judged docs for one query: (doc_id, grade).
    pub fn for_query<'a>(&'a self, query_id: &str) -> BTreeMap<&'a str, u32> {
        let mut m = BTreeMap::new();
        for ((q, d), g) in &self.judgments {
            if q == query_id {
                m.insert(d.as_str(), *g);
            }
        }
        m
    }

    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.for_query(query_id).values().filter(|g| **g > 0).count()
    }

    /// Query ids with no positive judgment; excluded from evaluation.
    pub fn queries_without_positives(&self) -> BTreeSet<String> {
        let mut any: BTreeMap<&str, bool> = BTreeMap::new();
        for ((q, _), g) in &self.judgments {
            let e = any.entry(q).or_insert(false);
            *e = *e || *g > 0;
        }
        any.iter()
            .filter(|(_, has)| !**has)
            .map(|(q, _)| q.to_string())
            .collect()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for ((q, d), g) in &self.judgments {
            out.push_str(&format!("{q} 0 {d} {g}\n"));
        }
        out
    }
}

pub fn parse_qrels(path: &Path, text: &str) -> Result<Qrels> {
    let mut judgments = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::ParseLine {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let grade: u32 = fields[3].parse().map_err(|_| Error::ParseLine {
            path: path.to_path_buf(),
            line: line_no,
            msg: format!("non-integer grade {:?}", fields[3]),
        })?;
        let key = (fields[0].to_string(), fields[2].to_string());
        if judgments.insert(key.clone(), grade).is_some() {
            return Err(Error::ParseLine {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("duplicate judgment for ({}, {})", key.0, key.1),
            });
        }
    }
    Ok(Qrels { judgments })
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_qrels(path, &text)
}

// ---------------------------------------------------------------------------
// Folds

/// query_id → fold index; folds must be contiguous 0..k.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoldAssignment {
    pub assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_count(&self) -> usize {
        self.assignment.values().map(|f| f + 1).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.fold_count();
        let used: BTreeSet<usize> = self.assignment.values().copied().collect();
        for f in 0..k {
            if !used.contains(&f) {
                return Err(Error::BadFolds(format!("fold {f} has no queries")));
            }
        }
        Ok(())
    }
}

pub fn load_folds(path: &Path) -> Result<FoldAssignment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut assignment = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::ParseLine {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let fold: usize = fields[1].parse().map_err(|_| Error::ParseLine {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("non-integer fold {:?}", fields[1]),
        })?;
        if assignment.insert(fields[0].to_string(), fold).is_some() {
            return Err(Error::ParseLine {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("query {} assigned twice", fields[0]),
            });
        }
    }
    let fa = FoldAssignment { assignment };
    fa.validate()?;
    Ok(fa)
}

// ---------------------------------------------------------------------------
// Queries

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub query_id: String,
    pub terms: Vec<String>,
}

/// TSV `qid<TAB>query text`; text goes through the same pipeline as documents.
pub fn load_queries(path: &Path, cfg: &PipelineConfig) -> Result<Vec<Query>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut queries = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (qid, qtext) = line.split_once('\t').ok_or_else(|| Error::ParseLine {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected qid<TAB>text".into(),
        })?;
        let qid = qid.trim();
        if !seen.insert(qid.to_string()) {
            return Err(Error::ParseLine {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("duplicate query id {qid}"),
            });
        }
        queries.push(Query {
            query_id: qid.to_string(),
            terms: tokenize(qtext, cfg),
        });
    }
    Ok(queries)
}
