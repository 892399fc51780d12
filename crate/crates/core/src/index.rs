//! Positional count statistics for unigrams, ordered bigrams, and unordered
//! within-window co-occurrence pairs, plus the directed "event" counts the
//! conditional windowed model normalizes over.
//!
//! Directed events are derived, not re-scanned: e_d(v,w) = c_d({v,w}) for
//! v != w and e_d(v,v) = 2*c_d({v,v}), which makes e_d(v,*) = sum_w e_d(v,w)
//! hold by construction. The brute-force oracle double-checks the derivation
//! by literal position enumeration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};

/// Exact mode uses true pair-space normalizers; galago_approx substitutes
/// document length and collection token count (scores stop being proper
/// probabilities, the difference is meant to wash out into tuned smoothing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizerMode {
    #[default]
    Exact,
    GalagoApprox,
}

impl NormalizerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizerMode::Exact => "exact",
            NormalizerMode::GalagoApprox => "galago_approx",
        }
    }
}

impl std::str::FromStr for NormalizerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(NormalizerMode::Exact),
            "galago_approx" | "galago" => Ok(NormalizerMode::GalagoApprox),
            other => Err(Error::InvalidParam(format!(
                "unknown normalizer mode {other:?} (expected exact|galago_approx)"
            ))),
        }
    }
}

/// Interned term; None = out of vocabulary (all counts zero).
pub type TermRef = Option<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnigramStats {
    pub n_doc: u64,
    pub doc_len: u64,
    pub n_coll: u64,
    pub coll_tokens: u64,
}

/// Shared shape for the two bag pair models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairStats {
    pub n_doc: u64,
    pub doc_norm: u64,
    pub n_coll: u64,
    pub coll_norm: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CondPart {
    pub pair_doc: u64,
    pub prefix_doc: u64,
    pub pair_coll: u64,
    pub prefix_coll: u64,
}

/// Numerators/denominators for both conditional models at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CondStats {
    pub bigram: CondPart,
    pub event: CondPart,
}

#[derive(Debug, Clone, Default)]
struct DocCounts {
    len: u64,
    unigram: HashMap<u32, u64>,
    bigram: HashMap<(u32, u32), u64>,
    bigram_prefix: HashMap<u32, u64>,
    /// Unordered pairs, key canonicalized to (min, max).
    window_pair: HashMap<(u32, u32), u64>,
    window_pair_total: u64,
    event: HashMap<(u32, u32), u64>,
    event_prefix: HashMap<u32, u64>,
}

impl DocCounts {
    /// Derive prefix marginals, pair totals, and directed events from the
    /// scanned unigram/bigram/window tables.
    fn finalize(&mut self) {
        self.bigram_prefix.clear();
        for (&(v, _), &c) in &self.bigram {
            *self.bigram_prefix.entry(v).or_insert(0) += c;
        }
        self.window_pair_total = self.window_pair.values().sum();
        self.event.clear();
        self.event_prefix.clear();
        for (&(u, v), &c) in &self.window_pair {
            if u == v {
                *self.event.entry((u, u)).or_insert(0) += 2 * c;
                *self.event_prefix.entry(u).or_insert(0) += 2 * c;
            } else {
                *self.event.entry((u, v)).or_insert(0) += c;
                *self.event.entry((v, u)).or_insert(0) += c;
                *self.event_prefix.entry(u).or_insert(0) += c;
                *self.event_prefix.entry(v).or_insert(0) += c;
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct CollCounts {
    tokens: u64,
    unigram: HashMap<u32, u64>,
    bigram: HashMap<(u32, u32), u64>,
    bigram_prefix: HashMap<u32, u64>,
    bigram_total: u64,
    window_pair: HashMap<(u32, u32), u64>,
    window_pair_total: u64,
    event: HashMap<(u32, u32), u64>,
    event_prefix: HashMap<u32, u64>,
    event_total: u64,
}

#[derive(Debug, Clone)]
pub struct PositionalIndex {
    window: u32,
    terms: Vec<String>,
    term_lookup: HashMap<String, u32>,
    doc_ids: Vec<String>,
    doc_lookup: HashMap<String, u32>,
    docs: Vec<DocCounts>,
    coll: CollCounts,
}

pub const DEFAULT_WINDOW: u32 = 8;

impl PositionalIndex {
    pub fn build<I>(docs: I, window: u32) -> Result<PositionalIndex>
    where
        I: IntoIterator<Item = TokenizedDoc>,
    {
        if window == 0 {
            return Err(Error::InvalidParam("window must be >= 1".into()));
        }
        let mut idx = PositionalIndex {
            window,
            terms: Vec::new(),
            term_lookup: HashMap::new(),
            doc_ids: Vec::new(),
            doc_lookup: HashMap::new(),
            docs: Vec::new(),
            coll: CollCounts::default(),
        };
        for doc in docs {
            idx.add_doc(doc)?;
        }
        idx.rebuild_collection();
        Ok(idx)
    }

    fn intern(&mut self, term: &str) -> u32 {
        if let Some(&id) = self.term_lookup.get(term) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(term.to_string());
        self.term_lookup.insert(term.to_string(), id);
        id
    }

    fn add_doc(&mut self, doc: TokenizedDoc) -> Result<()> {
        if self.doc_lookup.contains_key(&doc.doc_id) {
            return Err(Error::DuplicateDocId { doc_id: doc.doc_id });
        }
        let did = self.docs.len() as u32;
        let toks: Vec<u32> = doc.tokens.iter().map(|t| self.intern(t)).collect();
        let n = toks.len();
        let max_gap = (self.window - 1) as usize;

        let mut dc = DocCounts {
            len: n as u64,
            ..Default::default()
        };
        for &t in &toks {
            *dc.unigram.entry(t).or_insert(0) += 1;
        }
        for i in 0..n.saturating_sub(1) {
            *dc.bigram.entry((toks[i], toks[i + 1])).or_insert(0) += 1;
        }
        for i in 0..n {
            let hi = (i + max_gap).min(n.saturating_sub(1));
            for j in (i + 1)..=hi {
                let key = if toks[i] <= toks[j] {
                    (toks[i], toks[j])
                } else {
                    (toks[j], toks[i])
                };
                *dc.window_pair.entry(key).or_insert(0) += 1;
            }
        }
        dc.finalize();

        self.doc_lookup.insert(doc.doc_id.clone(), did);
        self.doc_ids.push(doc.doc_id);
        self.docs.push(dc);
        Ok(())
    }

    /// Collection aggregates are sums of per-doc counts.
    fn rebuild_collection(&mut self) {
        let mut coll = CollCounts::default();
        for dc in &self.docs {
            coll.tokens += dc.len;
            for (&t, &c) in &dc.unigram {
                *coll.unigram.entry(t).or_insert(0) += c;
            }
            for (&k, &c) in &dc.bigram {
                *coll.bigram.entry(k).or_insert(0) += c;
                coll.bigram_total += c;
            }
            for (&t, &c) in &dc.bigram_prefix {
                *coll.bigram_prefix.entry(t).or_insert(0) += c;
            }
            for (&k, &c) in &dc.window_pair {
                *coll.window_pair.entry(k).or_insert(0) += c;
            }
            coll.window_pair_total += dc.window_pair_total;
            for (&k, &c) in &dc.event {
                *coll.event.entry(k).or_insert(0) += c;
                coll.event_total += c;
            }
            for (&t, &c) in &dc.event_prefix {
                *coll.event_prefix.entry(t).or_insert(0) += c;
            }
        }
        self.coll = coll;
    }

    // -- basic accessors ----------------------------------------------------

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn coll_tokens(&self) -> u64 {
        self.coll.tokens
    }

    pub fn vocab(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_id(&self, doc: usize) -> &str {
        &self.doc_ids[doc]
    }

    pub fn doc_len(&self, doc: usize) -> u64 {
        self.docs[doc].len
    }

    pub fn doc_index(&self, doc_id: &str) -> Result<usize> {
        self.doc_lookup
            .get(doc_id)
            .map(|&d| d as usize)
            .ok_or_else(|| Error::UnknownDocId {
                doc_id: doc_id.to_string(),
            })
    }

    pub fn term_ref(&self, term: &str) -> TermRef {
        self.term_lookup.get(term).copied()
    }

    pub fn coll_unigram_count(&self, t: TermRef) -> u64 {
        t.and_then(|t| self.coll.unigram.get(&t).copied()).unwrap_or(0)
    }

    // -- stats accessors ----------------------------------------------------

    pub fn unigram_stats_at(&self, doc: usize, t: TermRef) -> UnigramStats {
        let dc = &self.docs[doc];
        UnigramStats {
            n_doc: t.and_then(|t| dc.unigram.get(&t).copied()).unwrap_or(0),
            doc_len: dc.len,
            n_coll: self.coll_unigram_count(t),
            coll_tokens: self.coll.tokens,
        }
    }

    pub fn bigram_stats_at(
        &self,
        doc: usize,
        v: TermRef,
        w: TermRef,
        mode: NormalizerMode,
    ) -> PairStats {
        let dc = &self.docs[doc];
        let (n_doc, n_coll) = match (v, w) {
            (Some(v), Some(w)) => (
                dc.bigram.get(&(v, w)).copied().unwrap_or(0),
                self.coll.bigram.get(&(v, w)).copied().unwrap_or(0),
            ),
            _ => (0, 0),
        };
        let (doc_norm, coll_norm) = match mode {
            NormalizerMode::Exact => (dc.len.saturating_sub(1), self.coll.bigram_total),
            NormalizerMode::GalagoApprox => (dc.len, self.coll.tokens),
        };
        PairStats {
            n_doc,
            doc_norm,
            n_coll,
            coll_norm,
        }
    }

    pub fn windowed_stats_at(
        &self,
        doc: usize,
        u: TermRef,
        v: TermRef,
        mode: NormalizerMode,
    ) -> PairStats {
        let dc = &self.docs[doc];
        let (n_doc, n_coll) = match (u, v) {
            (Some(a), Some(b)) => {
                let key = if a <= b { (a, b) } else { (b, a) };
                (
                    dc.window_pair.get(&key).copied().unwrap_or(0),
                    self.coll.window_pair.get(&key).copied().unwrap_or(0),
                )
            }
            _ => (0, 0),
        };
        let (doc_norm, coll_norm) = match mode {
            NormalizerMode::Exact => (dc.window_pair_total, self.coll.window_pair_total),
            NormalizerMode::GalagoApprox => (dc.len, self.coll.tokens),
        };
        PairStats {
            n_doc,
            doc_norm,
            n_coll,
            coll_norm,
        }
    }

    pub fn conditional_stats_at(&self, doc: usize, v: TermRef, w: TermRef) -> CondStats {
        let dc = &self.docs[doc];
        let (pair_doc, pair_coll, ev_doc, ev_coll) = match (v, w) {
            (Some(v), Some(w)) => (
                dc.bigram.get(&(v, w)).copied().unwrap_or(0),
                self.coll.bigram.get(&(v, w)).copied().unwrap_or(0),
                dc.event.get(&(v, w)).copied().unwrap_or(0),
                self.coll.event.get(&(v, w)).copied().unwrap_or(0),
            ),
            _ => (0, 0, 0, 0),
        };
        let (prefix_doc, prefix_coll, evp_doc, evp_coll) = match v {
            Some(v) => (
                dc.bigram_prefix.get(&v).copied().unwrap_or(0),
                self.coll.bigram_prefix.get(&v).copied().unwrap_or(0),
                dc.event_prefix.get(&v).copied().unwrap_or(0),
                self.coll.event_prefix.get(&v).copied().unwrap_or(0),
            ),
            None => (0, 0, 0, 0),
        };
        CondStats {
            bigram: CondPart {
                pair_doc,
                prefix_doc,
                pair_coll,
                prefix_coll,
            },
            event: CondPart {
                pair_doc: ev_doc,
                prefix_doc: evp_doc,
                pair_coll: ev_coll,
                prefix_coll: evp_coll,
            },
        }
    }

    // -- string-keyed variants (spec surface; resolve then delegate) --------

    pub fn unigram_stats(&self, term: &str, doc_id: &str) -> Result<UnigramStats> {
        Ok(self.unigram_stats_at(self.doc_index(doc_id)?, self.term_ref(term)))
    }

    pub fn bigram_stats(
        &self,
        v: &str,
        w: &str,
        doc_id: &str,
        mode: NormalizerMode,
    ) -> Result<PairStats> {
        Ok(self.bigram_stats_at(
            self.doc_index(doc_id)?,
            self.term_ref(v),
            self.term_ref(w),
            mode,
        ))
    }

    pub fn windowed_stats(
        &self,
        u: &str,
        v: &str,
        doc_id: &str,
        mode: NormalizerMode,
    ) -> Result<PairStats> {
        Ok(self.windowed_stats_at(
            self.doc_index(doc_id)?,
            self.term_ref(u),
            self.term_ref(v),
            mode,
        ))
    }

    pub fn conditional_stats(&self, v: &str, w: &str, doc_id: &str) -> Result<CondStats> {
        Ok(self.conditional_stats_at(self.doc_index(doc_id)?, self.term_ref(v), self.term_ref(w)))
    }

    // -- persistence ---------------------------------------------------------

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        put_u32(&mut buf, FORMAT_VERSION);
        put_u32(&mut buf, self.window);
        put_u32(&mut buf, self.terms.len() as u32);
        put_u32(&mut buf, self.docs.len() as u32);
        put_u64(&mut buf, self.coll.tokens);
        for t in &self.terms {
            put_str(&mut buf, t);
        }
        for (i, dc) in self.docs.iter().enumerate() {
            put_str(&mut buf, &self.doc_ids[i]);
            put_u64(&mut buf, dc.len);
            put_map1(&mut buf, &dc.unigram);
            put_map2(&mut buf, &dc.bigram);
            put_map2(&mut buf, &dc.window_pair);
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PositionalIndex> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| Error::io(path, e))?
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        let bad = |msg: &str| Error::BadIndexFile {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(MAGIC.len()).ok_or_else(|| bad("truncated magic"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.u32().ok_or_else(|| bad("truncated header"))?;
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let window = r.u32().ok_or_else(|| bad("truncated header"))?;
        let n_terms = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
        let n_docs = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
        let coll_tokens = r.u64().ok_or_else(|| bad("truncated header"))?;

        let mut idx = PositionalIndex {
            window,
            terms: Vec::with_capacity(n_terms),
            term_lookup: HashMap::new(),
            doc_ids: Vec::with_capacity(n_docs),
            doc_lookup: HashMap::new(),
            docs: Vec::with_capacity(n_docs),
            coll: CollCounts::default(),
        };
        for i in 0..n_terms {
            let t = r.str().ok_or_else(|| bad("truncated vocab"))?;
            idx.term_lookup.insert(t.clone(), i as u32);
            idx.terms.push(t);
        }
        for i in 0..n_docs {
            let id = r.str().ok_or_else(|| bad("truncated doc table"))?;
            let len = r.u64().ok_or_else(|| bad("truncated doc table"))?;
            let mut dc = DocCounts {
                len,
                unigram: r.map1().ok_or_else(|| bad("truncated unigram table"))?,
                bigram: r.map2().ok_or_else(|| bad("truncated bigram table"))?,
                window_pair: r.map2().ok_or_else(|| bad("truncated window table"))?,
                ..Default::default()
            };
            dc.finalize();
            idx.doc_lookup.insert(id.clone(), i as u32);
            idx.doc_ids.push(id);
            idx.docs.push(dc);
        }
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        idx.rebuild_collection();
        if idx.coll.tokens != coll_tokens {
            return Err(bad("token-count checksum mismatch"));
        }
        Ok(idx)
    }

    /// TSV dump of every count family, sorted, for diffing. Collection rows
    /// use doc id `*`.
    pub fn dump_stats(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "meta\twindow\t{}", self.window);
        let _ = writeln!(out, "meta\tdoc_count\t{}", self.docs.len());
        let _ = writeln!(out, "meta\tcoll_tokens\t{}", self.coll.tokens);
        let term = |t: u32| self.terms[t as usize].as_str();

        let mut doc_order: Vec<usize> = (0..self.docs.len()).collect();
        doc_order.sort_by(|&a, &b| self.doc_ids[a].cmp(&self.doc_ids[b]));

        for &d in &doc_order {
            let dc = &self.docs[d];
            let id = &self.doc_ids[d];
            let _ = writeln!(out, "len\t{id}\t{}", dc.len);
            let mut rows: Vec<(&str, u64)> =
                dc.unigram.iter().map(|(&t, &c)| (term(t), c)).collect();
            rows.sort();
            for (t, c) in rows {
                let _ = writeln!(out, "unigram\t{id}\t{t}\t{c}");
            }
            let mut rows: Vec<(&str, &str, u64)> = dc
                .bigram
                .iter()
                .map(|(&(v, w), &c)| (term(v), term(w), c))
                .collect();
            rows.sort();
            for (v, w, c) in rows {
                let _ = writeln!(out, "bigram\t{id}\t{v}\t{w}\t{c}");
            }
            let mut rows: Vec<(&str, &str, u64)> = dc
                .window_pair
                .iter()
                .map(|(&(u, v), &c)| (term(u), term(v), c))
                .collect();
            rows.sort();
            for (u, v, c) in rows {
                let _ = writeln!(out, "window\t{id}\t{u}\t{v}\t{c}");
            }
            let mut rows: Vec<(&str, &str, u64)> = dc
                .event
                .iter()
                .map(|(&(v, w), &c)| (term(v), term(w), c))
                .collect();
            rows.sort();
            for (v, w, c) in rows {
                let _ = writeln!(out, "event\t{id}\t{v}\t{w}\t{c}");
            }
        }

        let mut rows: Vec<(&str, u64)> = self
            .coll
            .unigram
            .iter()
            .map(|(&t, &c)| (term(t), c))
            .collect();
        rows.sort();
        for (t, c) in rows {
            let _ = writeln!(out, "unigram\t*\t{t}\t{c}");
        }
        let mut rows: Vec<(&str, &str, u64)> = self
            .coll
            .bigram
            .iter()
            .map(|(&(v, w), &c)| (term(v), term(w), c))
            .collect();
        rows.sort();
        for (v, w, c) in rows {
            let _ = writeln!(out, "bigram\t*\t{v}\t{w}\t{c}");
        }
        let mut rows: Vec<(&str, &str, u64)> = self
            .coll
            .window_pair
            .iter()
            .map(|(&(u, v), &c)| (term(u), term(v), c))
            .collect();
        rows.sort();
        for (u, v, c) in rows {
            let _ = writeln!(out, "window\t*\t{u}\t{v}\t{c}");
        }
        let _ = writeln!(out, "bigram_total\t*\t{}", self.coll.bigram_total);
        let _ = writeln!(out, "window_total\t*\t{}", self.coll.window_pair_total);
        let _ = writeln!(out, "event_total\t*\t{}", self.coll.event_total);
        out
    }
}

const MAGIC: &[u8] = b"SDMIDX01";
const FORMAT_VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len() as u32);
    buf.extend_from_slice(s.as_bytes());
}

fn put_map1(buf: &mut Vec<u8>, m: &HashMap<u32, u64>) {
    let mut rows: Vec<(u32, u64)> = m.iter().map(|(&k, &v)| (k, v)).collect();
    rows.sort_unstable();
    put_u32(buf, rows.len() as u32);
    for (k, v) in rows {
        put_u32(buf, k);
        put_u64(buf, v);
    }
}

fn put_map2(buf: &mut Vec<u8>, m: &HashMap<(u32, u32), u64>) {
    let mut rows: Vec<((u32, u32), u64)> = m.iter().map(|(&k, &v)| (k, v)).collect();
    rows.sort_unstable();
    put_u32(buf, rows.len() as u32);
    for ((a, b), v) in rows {
        put_u32(buf, a);
        put_u32(buf, b);
        put_u64(buf, v);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return None;
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn str(&mut self) -> Option<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).ok()
    }

    fn map1(&mut self) -> Option<HashMap<u32, u64>> {
        let n = self.u32()? as usize;
        let mut m = HashMap::with_capacity(n);
        for _ in 0..n {
            let k = self.u32()?;
            let v = self.u64()?;
            m.insert(k, v);
        }
        Some(m)
    }

    fn map2(&mut self) -> Option<HashMap<(u32, u32), u64>> {
        let n = self.u32()? as usize;
        let mut m = HashMap::with_capacity(n);
        for _ in 0..n {
            let a = self.u32()?;
            let b = self.u32()?;
            let v = self.u64()?;
            m.insert((a, b), v);
        }
        Some(m)
    }
}

pub fn toy_docs() -> Vec<TokenizedDoc> {
    vec![
        TokenizedDoc {
            doc_id: "D1".into(),
            tokens: ["a", "b", "a", "c"].iter().map(|s| s.to_string()).collect(),
        },
        TokenizedDoc {
            doc_id: "D2".into(),
            tokens: ["b", "a", "b"].iter().map(|s| s.to_string()).collect(),
        },
    ]
}
