//! Independent brute-force oracles used by the test suite and the `verify`
//! subcommand. Everything here is computed by literal position enumeration
//! from raw token sequences — deliberately quadratic, deliberately sharing no
//! counting code with the index.

use std::collections::BTreeMap;

/// All count families, keyed by plain strings. Per-doc maps are indexed by
/// position in the input doc list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BruteCounts {
    pub doc_count: usize,
    pub vocab: Vec<String>,

    pub doc_len: Vec<usize>,
    pub unigram: Vec<BTreeMap<String, u64>>,
    pub bigram: Vec<BTreeMap<(String, String), u64>>,
    /// Ordered-bigram prefix marginal per doc: n_{(v,*),d}.
    pub bigram_prefix: Vec<BTreeMap<String, u64>>,
    /// Unordered within-window pair counts per doc, key (min,max).
    pub window_pair: Vec<BTreeMap<(String, String), u64>>,
    pub window_pair_total: Vec<u64>,
    /// Directed within-window event counts per doc.
    pub event: Vec<BTreeMap<(String, String), u64>>,
    pub event_prefix: Vec<BTreeMap<String, u64>>,

    pub coll_tokens: u64,
    pub coll_unigram: BTreeMap<String, u64>,
    pub coll_bigram: BTreeMap<(String, String), u64>,
    pub coll_bigram_prefix: BTreeMap<String, u64>,
    pub coll_bigram_total: u64,
    pub coll_window_pair: BTreeMap<(String, String), u64>,
    pub coll_window_pair_total: u64,
    pub coll_event: BTreeMap<(String, String), u64>,
    pub coll_event_prefix: BTreeMap<String, u64>,
    pub coll_event_total: u64,
}

/// Enumerate every count family by scanning positions. `window` is the width
/// used for co-occurrence (position distance strictly less than `window`).
pub fn brute_counts(docs: &[Vec<String>], window: usize) -> BruteCounts {
    let mut out = BruteCounts {
        doc_count: docs.len(),
        ..Default::default()
    };
    let max_gap = window.saturating_sub(1);

    for toks in docs {
        let n = toks.len();
        out.doc_len.push(n);
        out.coll_tokens += n as u64;

        let mut uni: BTreeMap<String, u64> = BTreeMap::new();
        for t in toks {
            *uni.entry(t.clone()).or_insert(0) += 1;
            *out.coll_unigram.entry(t.clone()).or_insert(0) += 1;
        }

        let mut big: BTreeMap<(String, String), u64> = BTreeMap::new();
        let mut bigp: BTreeMap<String, u64> = BTreeMap::new();
        for i in 0..n.saturating_sub(1) {
            let key = (toks[i].clone(), toks[i + 1].clone());
            *big.entry(key.clone()).or_insert(0) += 1;
            *bigp.entry(toks[i].clone()).or_insert(0) += 1;
            *out.coll_bigram.entry(key).or_insert(0) += 1;
            *out.coll_bigram_prefix.entry(toks[i].clone()).or_insert(0) += 1;
            out.coll_bigram_total += 1;
        }

        let mut wpair: BTreeMap<(String, String), u64> = BTreeMap::new();
        let mut wtotal = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                if j - i > max_gap {
                    break;
                }
                let (u, v) = if toks[i] <= toks[j] {
                    (toks[i].clone(), toks[j].clone())
                } else {
                    (toks[j].clone(), toks[i].clone())
                };
                *wpair.entry((u.clone(), v.clone())).or_insert(0) += 1;
                *out.coll_window_pair.entry((u, v)).or_insert(0) += 1;
                wtotal += 1;
                out.coll_window_pair_total += 1;
            }
        }

        let mut ev: BTreeMap<(String, String), u64> = BTreeMap::new();
        let mut evp: BTreeMap<String, u64> = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || i.abs_diff(j) > max_gap {
                    continue;
                }
                let key = (toks[i].clone(), toks[j].clone());
                *ev.entry(key.clone()).or_insert(0) += 1;
                *evp.entry(toks[i].clone()).or_insert(0) += 1;
                *out.coll_event.entry(key).or_insert(0) += 1;
                *out.coll_event_prefix.entry(toks[i].clone()).or_insert(0) += 1;
                out.coll_event_total += 1;
            }
        }

        out.unigram.push(uni);
        out.bigram.push(big);
        out.bigram_prefix.push(bigp);
        out.window_pair.push(wpair);
        out.window_pair_total.push(wtotal);
        out.event.push(ev);
        out.event_prefix.push(evp);
    }

    let mut vocab: Vec<String> = out.coll_unigram.keys().cloned().collect();
    vocab.sort();
    out.vocab = vocab;
    out
}

// ---------------------------------------------------------------------------
// Factor-graph reference scorer
//
// Scores a document by walking the dependence factors one by one: a unigram
// factor per query position, and a bigram + windowed factor per adjacent
// query pair. Each factor evaluates its own smoothed log-probability with
// local formula code over brute-force counts; nothing is shared with the
// index derivation or the lm/scorer modules.

use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};
use crate::index::NormalizerMode;
use crate::lm::SmoothingParams;
use crate::scorer::MixtureWeights;

fn factor_log(n: u64, doc_norm: u64, cf: u64, coll_norm: u64, mu: f64) -> f64 {
    let ratio = if coll_norm > 0 {
        cf as f64 / coll_norm as f64
    } else {
        0.0
    };
    let num = n as f64 + mu * ratio;
    let den = doc_norm as f64 + mu;
    if num > 0.0 && den > 0.0 {
        (num / den).ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Per-family factor sums over brute counts, then the weighted combination
/// with the same conventions as the pipeline: a zero weight drops its family
/// entirely, any active family at -inf sinks the document.
pub(crate) fn factor_graph_score_counts(
    counts: &BruteCounts,
    doc: usize,
    query: &[String],
    lambda: MixtureWeights,
    mu: &SmoothingParams,
) -> f64 {
    let len = counts.doc_len[doc] as u64;
    let galago = counts_mode_is_galago(mu.mode);

    let mut s_u = 0.0;
    for t in query {
        s_u += factor_log(
            counts.unigram[doc].get(t).copied().unwrap_or(0),
            len,
            counts.coll_unigram.get(t).copied().unwrap_or(0),
            counts.coll_tokens,
            mu.mu_u,
        );
    }

    let mut s_b = 0.0;
    let mut s_w = 0.0;
    // literal adjacent-pair normalizer: how many bigram slots this doc has
    let bigram_doc_norm: u64 = counts.bigram[doc].values().sum();
    for pair in query.windows(2) {
        let key = (pair[0].clone(), pair[1].clone());
        let (bdn, bcn) = if galago {
            (len, counts.coll_tokens)
        } else {
            (bigram_doc_norm, counts.coll_bigram_total)
        };
        s_b += factor_log(
            counts.bigram[doc].get(&key).copied().unwrap_or(0),
            bdn,
            counts.coll_bigram.get(&key).copied().unwrap_or(0),
            bcn,
            mu.mu_b,
        );

        let wkey = if pair[0] <= pair[1] {
            (pair[0].clone(), pair[1].clone())
        } else {
            (pair[1].clone(), pair[0].clone())
        };
        let (wdn, wcn) = if galago {
            (len, counts.coll_tokens)
        } else {
            (counts.window_pair_total[doc], counts.coll_window_pair_total)
        };
        s_w += factor_log(
            counts.window_pair[doc].get(&wkey).copied().unwrap_or(0),
            wdn,
            counts.coll_window_pair.get(&wkey).copied().unwrap_or(0),
            wcn,
            mu.mu_w,
        );
    }

    let mut total = 0.0;
    for (w, s) in [(lambda.u, s_u), (lambda.b, s_b), (lambda.w, s_w)] {
        if w == 0.0 {
            continue;
        }
        if s == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += w * s;
    }
    total
}

fn counts_mode_is_galago(mode: NormalizerMode) -> bool {
    mode == NormalizerMode::GalagoApprox
}

/// Reference implementation of the weighted-sum dependence score, computed
/// from raw token sequences by position enumeration. Queries of fewer than
/// two terms have no dependence factors to check.
pub fn factor_graph_score(
    docs: &[TokenizedDoc],
    window: u32,
    query: &[String],
    doc_id: &str,
    lambda: MixtureWeights,
    mu: &SmoothingParams,
) -> Result<f64> {
    if query.len() < 2 {
        return Err(Error::DegenerateFactorGraph);
    }
    let doc = docs
        .iter()
        .position(|d| d.doc_id == doc_id)
        .ok_or(Error::UnknownDocId {
            doc_id: doc_id.to_string(),
        })?;
    let raw: Vec<Vec<String>> = docs.iter().map(|d| d.tokens.clone()).collect();
    let counts = brute_counts(&raw, window as usize);
    Ok(factor_graph_score_counts(&counts, doc, query, lambda, mu))
}

// ---------------------------------------------------------------------------
// Randomized cross-checks
//
// Seeded-random corpora compared stat-for-stat against the brute-force
// counters, and seeded-random scoring instances compared against the
// factor-graph reference. Both are deterministic for a given seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Compare every exposed index statistic against brute-force counts for the
/// same corpus. Probes all vocabulary terms plus one out-of-vocabulary term,
/// all ordered pairs of those, both normalizer modes. Returns the number of
/// scalar equalities checked.
pub fn compare_counts(counts: &BruteCounts, index: &crate::index::PositionalIndex) -> Result<u64> {
    use crate::index::NormalizerMode::{Exact, GalagoApprox};

    let mut checked = 0u64;
    let fail = |msg: String| -> Result<()> { Err(Error::VerificationFailed(msg)) };
    macro_rules! eq {
        ($a:expr, $b:expr, $($ctx:tt)*) => {{
            checked += 1;
            if $a != $b {
                fail(format!(
                    "{}: index={:?} brute={:?}",
                    format_args!($($ctx)*), $a, $b
                ))?;
            }
        }};
    }

    eq!(index.doc_count(), counts.doc_count, "doc_count");
    eq!(index.coll_tokens(), counts.coll_tokens, "coll_tokens");
    let mut index_vocab: Vec<String> = index.vocab().to_vec();
    index_vocab.sort(); // interning order vs sorted: compare as sets
    eq!(index_vocab, counts.vocab, "vocabulary");

    let mut probes = counts.vocab.clone();
    probes.push("zqq".to_string()); // never generated: out-of-vocabulary probe

    for doc in 0..counts.doc_count {
        let id = index.doc_id(doc).to_string();
        eq!(index.doc_len(doc), counts.doc_len[doc] as u64, "doc_len {id}");

        for v in &probes {
            let tv = index.term_ref(v);
            let u = index.unigram_stats_at(doc, tv);
            eq!(u.n_doc, counts.unigram[doc].get(v).copied().unwrap_or(0), "unigram n_doc {id} {v}");
            eq!(u.doc_len, counts.doc_len[doc] as u64, "unigram doc_len {id} {v}");
            eq!(u.n_coll, counts.coll_unigram.get(v).copied().unwrap_or(0), "unigram n_coll {v}");
            eq!(u.coll_tokens, counts.coll_tokens, "unigram coll_tokens {v}");

            for w in &probes {
                let tw = index.term_ref(w);
                let key = (v.clone(), w.clone());
                let wkey = if v <= w {
                    (v.clone(), w.clone())
                } else {
                    (w.clone(), v.clone())
                };

                let b = index.bigram_stats_at(doc, tv, tw, Exact);
                eq!(b.n_doc, counts.bigram[doc].get(&key).copied().unwrap_or(0), "bigram n_doc {id} {v},{w}");
                eq!(b.doc_norm, (counts.doc_len[doc] as u64).saturating_sub(1), "bigram doc_norm {id}");
                eq!(b.n_coll, counts.coll_bigram.get(&key).copied().unwrap_or(0), "bigram n_coll {v},{w}");
                eq!(b.coll_norm, counts.coll_bigram_total, "bigram coll_norm");
                let bg = index.bigram_stats_at(doc, tv, tw, GalagoApprox);
                eq!(bg.n_doc, b.n_doc, "bigram galago n_doc {id} {v},{w}");
                eq!(bg.doc_norm, counts.doc_len[doc] as u64, "bigram galago doc_norm {id}");
                eq!(bg.coll_norm, counts.coll_tokens, "bigram galago coll_norm");

                let ws = index.windowed_stats_at(doc, tv, tw, Exact);
                eq!(ws.n_doc, counts.window_pair[doc].get(&wkey).copied().unwrap_or(0), "window n_doc {id} {v},{w}");
                eq!(ws.doc_norm, counts.window_pair_total[doc], "window doc_norm {id}");
                eq!(ws.n_coll, counts.coll_window_pair.get(&wkey).copied().unwrap_or(0), "window n_coll {v},{w}");
                eq!(ws.coll_norm, counts.coll_window_pair_total, "window coll_norm");
                let wg = index.windowed_stats_at(doc, tv, tw, GalagoApprox);
                eq!(wg.doc_norm, counts.doc_len[doc] as u64, "window galago doc_norm {id}");
                eq!(wg.coll_norm, counts.coll_tokens, "window galago coll_norm");

                let c = index.conditional_stats_at(doc, tv, tw);
                eq!(c.bigram.pair_doc, counts.bigram[doc].get(&key).copied().unwrap_or(0), "cond bigram pair_doc {id} {v},{w}");
                eq!(c.bigram.prefix_doc, counts.bigram_prefix[doc].get(v).copied().unwrap_or(0), "cond bigram prefix_doc {id} {v}");
                eq!(c.bigram.pair_coll, counts.coll_bigram.get(&key).copied().unwrap_or(0), "cond bigram pair_coll {v},{w}");
                eq!(c.bigram.prefix_coll, counts.coll_bigram_prefix.get(v).copied().unwrap_or(0), "cond bigram prefix_coll {v}");
                eq!(c.event.pair_doc, counts.event[doc].get(&key).copied().unwrap_or(0), "event pair_doc {id} {v},{w}");
                eq!(c.event.prefix_doc, counts.event_prefix[doc].get(v).copied().unwrap_or(0), "event prefix_doc {id} {v}");
                eq!(c.event.pair_coll, counts.coll_event.get(&key).copied().unwrap_or(0), "event pair_coll {v},{w}");
                eq!(c.event.prefix_coll, counts.coll_event_prefix.get(v).copied().unwrap_or(0), "event prefix_coll {v}");
            }
        }
    }
    Ok(checked)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RandomCountReport {
    pub corpora: u64,
    pub docs: u64,
    pub comparisons: u64,
}

fn random_docs(
    rng: &mut ChaCha8Rng,
    max_vocab: usize,
    max_docs: usize,
    max_len: usize,
) -> Vec<TokenizedDoc> {
    let vocab = rng.gen_range(1..=max_vocab);
    let n_docs = rng.gen_range(1..=max_docs);
    let mut docs = Vec::with_capacity(n_docs);
    for j in 0..n_docs {
        // doc 0 is always nonempty so the collection has tokens
        let lo = usize::from(j == 0);
        let len = rng.gen_range(lo..=max_len);
        let tokens: Vec<String> = (0..len)
            .map(|_| ((b'a' + rng.gen_range(0..vocab) as u8) as char).to_string())
            .collect();
        docs.push(TokenizedDoc {
            doc_id: format!("D{j:03}"),
            tokens,
        });
    }
    docs
}

/// Build seeded random corpora, index each, and require every statistic to
/// match the brute-force counters exactly.
pub fn random_count_check(corpora: usize, seed: u64) -> Result<RandomCountReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let windows = [2u32, 3, 5, 8, 13];
    let mut report = RandomCountReport::default();
    for _ in 0..corpora {
        let docs = random_docs(&mut rng, 8, 50, 30);
        let window = windows[rng.gen_range(0..windows.len())];
        let raw: Vec<Vec<String>> = docs.iter().map(|d| d.tokens.clone()).collect();
        let counts = brute_counts(&raw, window as usize);
        let index = crate::index::PositionalIndex::build(docs, window)?;
        report.comparisons += compare_counts(&counts, &index)?;
        report.corpora += 1;
        report.docs += counts.doc_count as u64;
    }
    Ok(report)
}

fn random_simplex(rng: &mut ChaCha8Rng) -> MixtureWeights {
    let mut cuts = [rng.gen::<f64>(), rng.gen::<f64>()];
    cuts.sort_by(f64::total_cmp);
    let mut lam = MixtureWeights::new(cuts[0], cuts[1] - cuts[0], 1.0 - cuts[1]);
    if rng.gen_bool(0.3) {
        // exercise the weight-zero branch-skip rule
        match rng.gen_range(0..3) {
            0 => lam.u = 0.0,
            1 => lam.b = 0.0,
            _ => lam.w = 0.0,
        }
        let s = lam.u + lam.b + lam.w;
        if s > 0.0 {
            lam = MixtureWeights::new(lam.u / s, lam.b / s, lam.w / s);
        } else {
            lam = MixtureWeights::new(1.0, 0.0, 0.0);
        }
    }
    lam
}

/// Seeded random (corpus, query, document, weights, scales) instances: the
/// pipeline weighted-sum score must match the factor-graph reference within
/// `tol`. Returns the worst deviation seen.
pub fn random_factor_graph_check(instances: usize, seed: u64, tol: f64) -> Result<f64> {
    use crate::scorer::{score_mrf, FeatureKind, StopwordSet};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let no_stop = StopwordSet::new();
    let mut max_dev = 0.0f64;
    let mut done = 0usize;
    while done < instances {
        let docs = random_docs(&mut rng, 6, 8, 16);
        let window = [2u32, 3, 8][rng.gen_range(0..3)];
        let raw: Vec<Vec<String>> = docs.iter().map(|d| d.tokens.clone()).collect();
        let counts = brute_counts(&raw, window as usize);
        let index = crate::index::PositionalIndex::build(docs, window)?;

        let per_corpus = 25.min(instances - done);
        for _ in 0..per_corpus {
            let qlen = rng.gen_range(2..=4);
            let query: Vec<String> = (0..qlen)
                .map(|_| {
                    if rng.gen_bool(0.08) {
                        "zqq".to_string() // out-of-vocabulary term
                    } else {
                        counts.vocab[rng.gen_range(0..counts.vocab.len())].clone()
                    }
                })
                .collect();
            let doc = rng.gen_range(0..counts.doc_count);
            let lambda = random_simplex(&mut rng);
            fn logmu(rng: &mut ChaCha8Rng) -> f64 {
                (rng.gen::<f64>() * (200.0f64.ln() - 0.05f64.ln()) + 0.05f64.ln()).exp()
            }
            let mut mu_u = logmu(&mut rng);
            let mut mu_b = logmu(&mut rng);
            let mut mu_w = logmu(&mut rng);
            if rng.gen_bool(0.05) {
                mu_u = 0.0;
            }
            if rng.gen_bool(0.05) {
                mu_b = 0.0;
            }
            if rng.gen_bool(0.05) {
                mu_w = 0.0;
            }
            let mode = if rng.gen_bool(0.5) {
                NormalizerMode::Exact
            } else {
                NormalizerMode::GalagoApprox
            };
            let mu = SmoothingParams::new(mu_u, mu_b, mu_w, mode)?;

            let reference = factor_graph_score_counts(&counts, doc, &query, lambda, &mu);
            let pipeline = score_mrf(
                &index,
                &query,
                index.doc_id(doc),
                lambda,
                FeatureKind::Bag,
                &mu,
                &no_stop,
            )?;
            let dev = close_or_both_neg_inf(reference, pipeline);
            if dev > max_dev {
                max_dev = dev;
            }
            if !(dev <= tol) {
                return Err(Error::VerificationFailed(format!(
                    "random factor-graph mismatch: reference={reference} pipeline={pipeline} dev={dev:e} lambda=({},{},{}) mu=({mu_u},{mu_b},{mu_w}) mode={} window={window} on {}",
                    lambda.u,
                    lambda.b,
                    lambda.w,
                    mode.as_str(),
                    describe_instance(&raw, &query, doc)
                )));
            }
            done += 1;
        }
    }
    Ok(max_dev)
}

// ---------------------------------------------------------------------------
// Exhaustive equivalence sweep
//
// Enumerates every two-document corpus up to vocabulary relabeling and
// document order within the configured bounds, and on each one checks, for
// every query and document:
//   (a) the nested two-level mixture equals the flat three-way mixture under
//       the weight reparametrization, across a grid of nested weights;
//   (b) the pipeline weighted-sum score equals the factor-graph reference
//       (sampled corpora);
//   (c) single-term queries collapse every scorer to the plain unigram score
//       bitwise (sampled corpora).
// Check (a) is memoized on the exact bit patterns of the component triple;
// both combiners are pure functions of that triple, so a cache hit is the
// same check, not a skipped one.

use std::collections::HashSet;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub vocab: usize,
    pub max_doc_len: usize,
    pub max_query_len: usize,
    /// Points per axis of the nested-weight grid (11 → 0.0, 0.1, …, 1.0).
    pub lambda_points: usize,
    pub window: u32,
    pub mu: SmoothingParams,
    pub tol: f64,
    /// Run the factor-graph cross-check on every k-th corpus.
    pub theorem1_stride: u64,
    /// Run the single-term collapse check on every k-th corpus.
    pub collapse_stride: u64,
    /// Deliberately swap the two derived mixture weights; the sweep must
    /// catch this immediately (self-test of the harness).
    pub inject_fault: bool,
}

impl Default for SweepConfig {
    fn default() -> SweepConfig {
        SweepConfig {
            vocab: 4,
            max_doc_len: 6,
            max_query_len: 3,
            lambda_points: 11,
            window: crate::index::DEFAULT_WINDOW,
            mu: SmoothingParams::default(),
            tol: 1e-12,
            theorem1_stride: 8,
            collapse_stride: 4,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub corpora: u64,
    pub jm_instances: u64,
    pub distinct_triples: u64,
    pub theorem1_checks: u64,
    pub collapse_checks: u64,
    pub max_jm_dev: f64,
    pub max_theorem1_dev: f64,
}

impl std::fmt::Display for SweepReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "corpora\t{}", self.corpora)?;
        writeln!(f, "mixture_instances\t{}", self.jm_instances)?;
        writeln!(f, "distinct_component_triples\t{}", self.distinct_triples)?;
        writeln!(f, "factor_graph_checks\t{}", self.theorem1_checks)?;
        writeln!(f, "collapse_checks\t{}", self.collapse_checks)?;
        writeln!(f, "max_mixture_deviation\t{:e}", self.max_jm_dev)?;
        write!(f, "max_factor_graph_deviation\t{:e}", self.max_theorem1_dev)
    }
}

/// All sequences over `vocab` letters with lengths 1..=max_len, as letter
/// indices, in length-then-lexicographic order.
fn enumerate_sequences(vocab: usize, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        let total = (vocab as u64).pow(len as u32);
        let mut cur = vec![0u8; len];
        for _ in 0..total {
            out.push(cur.clone());
            for i in (0..len).rev() {
                cur[i] += 1;
                if (cur[i] as usize) < vocab {
                    break;
                }
                cur[i] = 0;
            }
        }
    }
    out
}

/// True when d1‖d2 introduces letters in the order 0,1,2,… — i.e. the pair
/// is its own first-occurrence relabeling.
fn concat_is_identity_pattern(d1: &[u8], d2: &[u8]) -> bool {
    let mut next = 0u8;
    let mut seen = [false; 26];
    for &t in d1.iter().chain(d2) {
        if !seen[t as usize] {
            if t != next {
                return false;
            }
            seen[t as usize] = true;
            next += 1;
        }
    }
    true
}

/// First-occurrence relabeling of d2‖d1 (the canonical form of the swapped
/// ordering).
fn swapped_pattern(d1: &[u8], d2: &[u8]) -> Vec<u8> {
    let mut map = [u8::MAX; 26];
    let mut next = 0u8;
    let mut out = Vec::with_capacity(d1.len() + d2.len());
    for &t in d2.iter().chain(d1) {
        if map[t as usize] == u8::MAX {
            map[t as usize] = next;
            next += 1;
        }
        out.push(map[t as usize]);
    }
    out
}

/// Keep exactly one ordered, relabeled representative per unordered corpus:
/// the concatenation must be its own pattern, and must not lose to the
/// canonical form of the swapped ordering (ties broken by first-doc length).
fn pair_is_canonical(d1: &[u8], d2: &[u8]) -> bool {
    if !concat_is_identity_pattern(d1, d2) {
        return false;
    }
    let rev = swapped_pattern(d1, d2);
    let fwd = d1.iter().chain(d2);
    match fwd.cmp(rev.iter()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => d1.len() <= d2.len(),
    }
}

const MEMO_CAP: usize = 16_000_000;

struct SweepState {
    report: SweepReport,
    memo: HashSet<[u64; 3]>,
    jm_grid: Vec<f64>,
    tol: f64,
    inject_fault: bool,
}

fn reparam_maybe_faulty(jm: crate::scorer::JMWeights, fault: bool) -> MixtureWeights {
    let w = crate::scorer::jm_reparam(jm);
    if fault {
        MixtureWeights::new(w.u, w.w, w.b)
    } else {
        w
    }
}

fn describe_instance(docs: &[Vec<String>], query: &[String], doc: usize) -> String {
    format!(
        "docs=[{}] query=[{}] doc=D{}",
        docs.iter()
            .map(|d| d.join(" "))
            .collect::<Vec<_>>()
            .join(" | "),
        query.join(" "),
        doc + 1
    )
}

fn close_or_both_neg_inf(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Sweep driver. Returns counts and worst-case deviations, or the first
/// failing instance as a `VerificationFailed` error.
pub fn exhaustive_equivalence(cfg: &SweepConfig) -> Result<SweepReport> {
    use crate::index::PositionalIndex;
    use crate::scorer::{
        bag_components, combine_gen_bag, combine_jm, combine_mrf, resolve_query, score,
        JMWeights, ScorerKind, ScorerSpec, StopwordSet,
    };

    if cfg.vocab == 0 || cfg.vocab > 26 {
        return Err(Error::InvalidParam("vocab must be 1..=26".into()));
    }
    if cfg.lambda_points < 2 {
        return Err(Error::InvalidParam("lambda_points must be >= 2".into()));
    }
    if cfg.max_doc_len == 0 || cfg.max_query_len == 0 {
        return Err(Error::InvalidParam("lengths must be >= 1".into()));
    }

    let letters: Vec<String> = (0..cfg.vocab)
        .map(|i| ((b'a' + i as u8) as char).to_string())
        .collect();
    let seqs = enumerate_sequences(cfg.vocab, cfg.max_doc_len);
    let queries: Vec<Vec<String>> = enumerate_sequences(cfg.vocab, cfg.max_query_len)
        .into_iter()
        .map(|q| q.iter().map(|&i| letters[i as usize].clone()).collect())
        .collect();
    let jm_grid: Vec<f64> = (0..cfg.lambda_points)
        .map(|i| i as f64 / (cfg.lambda_points - 1) as f64)
        .collect();

    let mut st = SweepState {
        report: SweepReport::default(),
        memo: HashSet::new(),
        jm_grid,
        tol: cfg.tol,
        inject_fault: cfg.inject_fault,
    };
    let stop = StopwordSet::new();
    let mu = cfg.mu;

    // fixed weight points for the factor-graph cross-check, including a
    // dropped family
    let t1_lambdas = [
        MixtureWeights::new(0.8, 0.1, 0.1),
        MixtureWeights::new(0.2, 0.5, 0.3),
        MixtureWeights::new(0.6, 0.0, 0.4),
    ];
    let collapse_specs = [
        ScorerSpec::ql(mu),
        ScorerSpec::with_lambda(ScorerKind::MrfSdm, MixtureWeights::new(0.5, 0.3, 0.2), mu),
        ScorerSpec::with_lambda(ScorerKind::GenSdm, MixtureWeights::new(0.2, 0.5, 0.3), mu),
        ScorerSpec::with_lambda(
            ScorerKind::GenNgram,
            MixtureWeights::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
            mu,
        ),
        ScorerSpec::with_lambda(ScorerKind::MrfNgram, MixtureWeights::new(0.7, 0.2, 0.1), mu),
        ScorerSpec::jm(JMWeights::new(0.6, 0.4), mu),
    ];

    for d1 in seqs.iter().filter(|s| s[0] == 0) {
        for d2 in &seqs {
            if !pair_is_canonical(d1, d2) {
                continue;
            }
            st.report.corpora += 1;
            let raw: Vec<Vec<String>> = [d1, d2]
                .iter()
                .map(|s| s.iter().map(|&i| letters[i as usize].clone()).collect())
                .collect();
            let docs: Vec<TokenizedDoc> = raw
                .iter()
                .enumerate()
                .map(|(i, toks)| TokenizedDoc {
                    doc_id: format!("D{}", i + 1),
                    tokens: toks.clone(),
                })
                .collect();
            let index = PositionalIndex::build(docs, cfg.window)?;
            let check_t1 = st.report.corpora % cfg.theorem1_stride == 0;
            let check_collapse = st.report.corpora % cfg.collapse_stride == 0;
            let counts = if check_t1 {
                Some(brute_counts(&raw, cfg.window as usize))
            } else {
                None
            };

            for q in &queries {
                let rq = resolve_query(&index, q, &stop);
                if q.len() == 1 {
                    if check_collapse {
                        for doc in 0..2usize {
                            let doc_id = index.doc_id(doc).to_string();
                            let base = score(&index, q, &doc_id, &collapse_specs[0], &stop)?;
                            for spec in &collapse_specs[1..] {
                                let got = score(&index, q, &doc_id, spec, &stop)?;
                                st.report.collapse_checks += 1;
                                if got != base && !(got.is_nan() && base.is_nan()) {
                                    return Err(Error::VerificationFailed(format!(
                                        "single-term collapse: {:?} scored {got} vs unigram {base} on {}",
                                        spec.kind,
                                        describe_instance(&raw, q, doc)
                                    )));
                                }
                            }
                        }
                    }
                    continue;
                }

                for doc in 0..2usize {
                    let comps = bag_components(&index, &rq, doc, &mu)?;
                    st.report.jm_instances += 1;

                    let key = [
                        comps.s_u.to_bits(),
                        comps.s_b.to_bits(),
                        comps.s_w.to_bits(),
                    ];
                    let fresh = if st.memo.contains(&key) {
                        false
                    } else {
                        if st.memo.len() < MEMO_CAP {
                            st.memo.insert(key);
                        }
                        true
                    };
                    if fresh {
                        for &ju in &st.jm_grid {
                            for &jb in &st.jm_grid {
                                let jm = JMWeights::new(ju, jb);
                                let nested = combine_jm(jm, &comps);
                                let flat = combine_gen_bag(
                                    reparam_maybe_faulty(jm, st.inject_fault),
                                    &comps,
                                );
                                let dev = close_or_both_neg_inf(nested, flat);
                                if dev > st.report.max_jm_dev {
                                    st.report.max_jm_dev = dev;
                                }
                                if !(dev <= st.tol) {
                                    return Err(Error::VerificationFailed(format!(
                                        "nested/flat mixture mismatch: nested={nested} flat={flat} dev={dev:e} at jm=({ju},{jb}) comps=({}, {}, {}) on {}",
                                        comps.s_u,
                                        comps.s_b,
                                        comps.s_w,
                                        describe_instance(&raw, q, doc)
                                    )));
                                }
                            }
                        }
                    }

                    if let Some(counts) = &counts {
                        for &lam in &t1_lambdas {
                            let fg = factor_graph_score_counts(counts, doc, q, lam, &mu);
                            let pipe = combine_mrf(lam, &comps);
                            let dev = close_or_both_neg_inf(fg, pipe);
                            st.report.theorem1_checks += 1;
                            if dev > st.report.max_theorem1_dev {
                                st.report.max_theorem1_dev = dev;
                            }
                            if !(dev <= st.tol) {
                                return Err(Error::VerificationFailed(format!(
                                    "factor-graph mismatch: reference={fg} pipeline={pipe} dev={dev:e} at lambda=({},{},{}) on {}",
                                    lam.u,
                                    lam.b,
                                    lam.w,
                                    describe_instance(&raw, q, doc)
                                )));
                            }
                        }
                    }
                }
            }
        }
    }
    st.report.distinct_triples = st.memo.len() as u64;
    Ok(st.report)
}
