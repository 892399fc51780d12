//! TREC run files: `qid Q0 docid rank score tag`, rank 1-based and
//! contiguous per query, score fixed to six decimals, queries in input
//! order. Ties are already broken upstream by doc id, so identical printed
//! scores stay in deterministic order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scorer::Ranking;

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

pub fn format_run_line(query_id: &str, doc_id: &str, rank: usize, score: f64, tag: &str) -> String {
    format!("{query_id} Q0 {doc_id} {rank} {score:.6} {tag}")
}

/// Render rankings as one run-file string. Queries that retrieved nothing
/// contribute no lines; an empty ranking collection is a caller bug.
pub fn run_to_string(rankings: &[Ranking], tag: &str) -> Result<String> {
    if rankings.is_empty() {
        return Err(Error::InvalidParam("no rankings to write".into()));
    }
    let mut out = String::new();
    for r in rankings {
        for (i, (doc_id, score)) in r.entries.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}",
                format_run_line(&r.query_id, doc_id, i + 1, *score, tag)
            );
        }
    }
    Ok(out)
}

pub fn write_run_file(rankings: &[Ranking], tag: &str, path: &Path) -> Result<()> {
    let text = run_to_string(rankings, tag)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parse a run file back into rankings, grouped by query in first-seen
/// order. Ranks must be contiguous from 1 within each query.
pub fn read_run_file(path: &Path) -> Result<Vec<Ranking>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut by_query: std::collections::BTreeMap<String, Vec<(usize, String, f64)>> =
        std::collections::BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::ParseLine {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("expected 6 fields, got {}", f.len()),
            });
        }
        if f[1] != "Q0" {
            return Err(Error::ParseLine {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("expected literal Q0, got {:?}", f[1]),
            });
        }
        let rank: usize = f[3].parse().map_err(|_| Error::ParseLine {
            path: path.to_path_buf(),
            line: line_no,
            msg: format!("bad rank {:?}", f[3]),
        })?;
        let score: f64 = f[4].parse().map_err(|_| Error::ParseLine {
            path: path.to_path_buf(),
            line: line_no,
            msg: format!("bad score {:?}", f[4]),
        })?;
        if !by_query.contains_key(f[0]) {
            order.push(f[0].to_string());
        }
        by_query
            .entry(f[0].to_string())
            .or_default()
            .push((rank, f[2].to_string(), score));
    }
    let mut out = Vec::with_capacity(order.len());
    for qid in order {
        let entries = by_query.remove(&qid).expect("grouped above");
        for (i, (rank, _, _)) in entries.iter().enumerate() {
            if *rank != i + 1 {
                return Err(Error::ParseLine {
                    path: path.to_path_buf(),
                    line: 0,
                    msg: format!("query {qid}: ranks not contiguous from 1 (saw {rank} at position {})", i + 1),
                });
            }
        }
        out.push(Ranking {
            query_id: qid,
            entries: entries.into_iter().map(|(_, d, s)| (d, s)).collect(),
            empty_query: false,
        });
    }
    Ok(out)
}
