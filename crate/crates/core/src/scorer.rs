//! Document scorers. Every scorer is the composition of two layers:
//!
//!   1. component assembly — per (query, document) sums of language-model
//!      log-probabilities (`bag_components`, `ngram_linear_components`,
//!      `ngram_positional_components`);
//!   2. a pure combiner over those components and the mixture weights
//!      (`combine_mrf`, `combine_gen_bag`, `combine_jm`, `combine_gen_ngram`).
//!
//! Parameter sweeps reuse layer 1 across weight candidates; the public
//! `score_*` functions are exactly layer-2-after-layer-1, so nothing the
//! sweeps measure can drift from what scoring does.
//!
//! -inf convention: a zero-probability component poisons linear (MRF)
//! combinations when its weight is active, and contributes zero mass to
//! generative mixtures; a mixture with no surviving branch is itself -inf.

use std::collections::BTreeSet;

use crate::corpus::Query;
use crate::error::{Error, Result};
use crate::index::{PositionalIndex, TermRef};
use crate::lm::{
    lm_bigram_bag, lm_bigram_cond, lm_unigram, lm_windowed_bag, lm_windowed_cond, SmoothingParams,
};

pub type StopwordSet = BTreeSet<String>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureWeights {
    pub u: f64,
    pub b: f64,
    pub w: f64,
}

impl MixtureWeights {
    pub fn new(u: f64, b: f64, w: f64) -> MixtureWeights {
        MixtureWeights { u, b, w }
    }

    /// Generative scorers need a probability simplex point.
    pub fn validate_simplex(&self) -> Result<()> {
        let sum = self.u + self.b + self.w;
        if self.u < 0.0 || self.b < 0.0 || self.w < 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParam(format!(
                "mixture weights ({}, {}, {}) must be nonnegative and sum to 1",
                self.u, self.b, self.w
            )));
        }
        Ok(())
    }

    /// MRF weights are unconstrained reals, but must at least be numbers.
    pub fn validate_finite(&self) -> Result<()> {
        if !(self.u.is_finite() && self.b.is_finite() && self.w.is_finite()) {
            return Err(Error::InvalidParam("mixture weights must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JMWeights {
    pub u: f64,
    pub b: f64,
}

impl JMWeights {
    pub fn new(u: f64, b: f64) -> JMWeights {
        JMWeights { u, b }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.u, self.b] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParam(format!(
                    "JM weights ({}, {}) must lie in [0,1]",
                    self.u, self.b
                )));
            }
        }
        Ok(())
    }
}

/// Nested-to-flat weight map: the outer unigram interpolation keeps lambda_u,
/// the inner bigram/window split shares what remains.
pub fn jm_reparam(jm: JMWeights) -> MixtureWeights {
    MixtureWeights {
        u: jm.u,
        b: (1.0 - jm.u) * jm.b,
        w: (1.0 - jm.u) * (1.0 - jm.b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Bag,
    Ngram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerKind {
    Ql,
    MrfSdm,
    GenSdm,
    GenNgram,
    MrfNgram,
    Jm,
}

impl ScorerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScorerKind::Ql => "QL",
            ScorerKind::MrfSdm => "mrfSDM",
            ScorerKind::GenSdm => "genSDM",
            ScorerKind::GenNgram => "genNGram",
            ScorerKind::MrfNgram => "mrfNGram",
            ScorerKind::Jm => "JM",
        }
    }

    /// Does the lambda mixture live on the probability simplex?
    pub fn is_generative(self) -> bool {
        matches!(self, ScorerKind::GenSdm | ScorerKind::GenNgram)
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "QL" | "ql" => Ok(ScorerKind::Ql),
            "mrfSDM" | "mrfsdm" => Ok(ScorerKind::MrfSdm),
            "genSDM" | "gensdm" => Ok(ScorerKind::GenSdm),
            "genNGram" | "genngram" => Ok(ScorerKind::GenNgram),
            "mrfNGram" | "mrfngram" => Ok(ScorerKind::MrfNgram),
            "JM" | "jm" => Ok(ScorerKind::Jm),
            other => Err(Error::InvalidParam(format!(
                "unknown model {other:?} (expected QL|mrfSDM|genSDM|genNGram|mrfNGram|JM)"
            ))),
        }
    }
}

/// Full description of one scoring configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    pub lambda: MixtureWeights,
    pub jm: JMWeights,
    pub mu: SmoothingParams,
}

impl ScorerSpec {
    pub fn ql(mu: SmoothingParams) -> ScorerSpec {
        ScorerSpec {
            kind: ScorerKind::Ql,
            lambda: MixtureWeights::new(1.0, 0.0, 0.0),
            jm: JMWeights::new(1.0, 0.5),
            mu,
        }
    }

    pub fn with_lambda(kind: ScorerKind, lambda: MixtureWeights, mu: SmoothingParams) -> ScorerSpec {
        ScorerSpec {
            kind,
            lambda,
            jm: JMWeights::new(1.0, 0.5),
            mu,
        }
    }

    pub fn jm(jm: JMWeights, mu: SmoothingParams) -> ScorerSpec {
        ScorerSpec {
            kind: ScorerKind::Jm,
            lambda: MixtureWeights::new(1.0, 0.0, 0.0),
            jm,
            mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ScorerKind::Ql => Ok(()),
            ScorerKind::MrfSdm | ScorerKind::MrfNgram => self.lambda.validate_finite(),
            ScorerKind::GenSdm | ScorerKind::GenNgram => self.lambda.validate_simplex(),
            ScorerKind::Jm => self.jm.validate(),
        }
    }
}

// ---------------------------------------------------------------------------
// Layer 1: component assembly

/// Query with terms resolved against one index. `positions` keeps every
/// term in order; `unigram` holds the stopword-filtered subset that unigram
/// scoring (and QL candidate generation) sees.
#[derive(Debug, Clone)]
pub struct ResolvedQuery {
    pub positions: Vec<TermRef>,
    pub unigram: Vec<TermRef>,
}

impl ResolvedQuery {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub fn resolve_query(
    index: &PositionalIndex,
    terms: &[String],
    stopwords: &StopwordSet,
) -> ResolvedQuery {
    ResolvedQuery {
        positions: terms.iter().map(|t| index.term_ref(t)).collect(),
        unigram: terms
            .iter()
            .filter(|t| !stopwords.contains(*t))
            .map(|t| index.term_ref(t))
            .collect(),
    }
}

/// The three whole-query log components of the bag models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BagComponents {
    pub s_u: f64,
    pub s_b: f64,
    pub s_w: f64,
}

/// Per-position probabilities for the positional generative mixture:
/// `first` is log p_u(q1); each row holds (log p_u, log p_b|prev, log p_w|prev).
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalComponents {
    pub first: f64,
    pub rest: Vec<[f64; 3]>,
}

fn sum_unigram(
    index: &PositionalIndex,
    terms: &[TermRef],
    doc: usize,
    mu_u: f64,
) -> Result<f64> {
    let mut s = 0.0;
    for &t in terms {
        s += lm_unigram(&index.unigram_stats_at(doc, t), mu_u)?;
    }
    Ok(s)
}

/// S_u over filtered terms; S_b, S_w over adjacent pairs of the full query.
pub fn bag_components(
    index: &PositionalIndex,
    rq: &ResolvedQuery,
    doc: usize,
    mu: &SmoothingParams,
) -> Result<BagComponents> {
    let s_u = sum_unigram(index, &rq.unigram, doc, mu.mu_u)?;
    let mut s_b = 0.0;
    let mut s_w = 0.0;
    for pair in rq.positions.windows(2) {
        s_b += lm_bigram_bag(&index.bigram_stats_at(doc, pair[0], pair[1], mu.mode), mu.mu_b);
        s_w += lm_windowed_bag(
            &index.windowed_stats_at(doc, pair[0], pair[1], mu.mode),
            mu.mu_w,
        );
    }
    Ok(BagComponents { s_u, s_b, s_w })
}

/// Conditional-feature analogue: S_b and S_w are chain log-likelihoods, each
/// opening with the unigram probability of the first query term (the chain
/// has nothing to condition on there) and continuing with conditional terms.
pub fn ngram_linear_components(
    index: &PositionalIndex,
    rq: &ResolvedQuery,
    doc: usize,
    mu: &SmoothingParams,
) -> Result<BagComponents> {
    let s_u = sum_unigram(index, &rq.unigram, doc, mu.mu_u)?;
    let first = lm_unigram(&index.unigram_stats_at(doc, rq.positions[0]), mu.mu_u)?;
    let mut s_b = first;
    let mut s_w = first;
    for pair in rq.positions.windows(2) {
        let cond = index.conditional_stats_at(doc, pair[0], pair[1]);
        s_b += lm_bigram_cond(&cond.bigram, mu.mu_b);
        s_w += lm_windowed_cond(&cond.event, mu.mu_w, index.window());
    }
    Ok(BagComponents { s_u, s_b, s_w })
}

pub fn ngram_positional_components(
    index: &PositionalIndex,
    rq: &ResolvedQuery,
    doc: usize,
    mu: &SmoothingParams,
) -> Result<PositionalComponents> {
    let first = lm_unigram(&index.unigram_stats_at(doc, rq.positions[0]), mu.mu_u)?;
    let mut rest = Vec::with_capacity(rq.positions.len().saturating_sub(1));
    for pair in rq.positions.windows(2) {
        let p_u = lm_unigram(&index.unigram_stats_at(doc, pair[1]), mu.mu_u)?;
        let cond = index.conditional_stats_at(doc, pair[0], pair[1]);
        let p_b = lm_bigram_cond(&cond.bigram, mu.mu_b);
        let p_w = lm_windowed_cond(&cond.event, mu.mu_w, index.window());
        rest.push([p_u, p_b, p_w]);
    }
    Ok(PositionalComponents { first, rest })
}

// ---------------------------------------------------------------------------
// Layer 2: combiners

/// Linear combination with the 0 * (-inf) := 0 convention: inactive weights
/// skip their component entirely; an active weight on a -inf component sinks
/// the whole score.
pub fn combine_mrf(lambda: MixtureWeights, c: &BagComponents) -> f64 {
    let mut total = 0.0;
    for (w, s) in [(lambda.u, c.s_u), (lambda.b, c.s_b), (lambda.w, c.s_w)] {
        if w != 0.0 {
            if s == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            total += w * s;
        }
    }
    total
}

/// log sum of weighted exponentials with max shift; branches with zero weight
/// or zero probability drop out. Exactly one surviving branch short-circuits
/// to log(w) + s so weight-1 collapses are bitwise.
fn log_mix(branches: &[(f64, f64)]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut active = 0usize;
    let mut last = (0.0, 0.0);
    for &(w, s) in branches {
        if w > 0.0 && s > f64::NEG_INFINITY {
            active += 1;
            last = (w, s);
            if s > max {
                max = s;
            }
        }
    }
    match active {
        0 => f64::NEG_INFINITY,
        1 => {
            let (w, s) = last;
            if w == 1.0 {
                s
            } else {
                w.ln() + s
            }
        }
        _ => {
            let mut sum = 0.0;
            for &(w, s) in branches {
                if w > 0.0 && s > f64::NEG_INFINITY {
                    sum += w * (s - max).exp();
                }
            }
            sum.ln() + max
        }
    }
}

/// Whole-query generative mixture: log(l_u e^{S_u} + l_b e^{S_b} + l_w e^{S_w}).
pub fn combine_gen_bag(lambda: MixtureWeights, c: &BagComponents) -> f64 {
    log_mix(&[(lambda.u, c.s_u), (lambda.b, c.s_b), (lambda.w, c.s_w)])
}

/// Nested smoothing: inner bigram/window interpolation, then unigram back-off.
/// Deliberately computed in nested form — its agreement with
/// `combine_gen_bag(jm_reparam(..))` is a theorem, not shared code.
pub fn combine_jm(jm: JMWeights, c: &BagComponents) -> f64 {
    let inner = log_mix(&[(jm.b, c.s_b), (1.0 - jm.b, c.s_w)]);
    log_mix(&[(jm.u, c.s_u), (1.0 - jm.u, inner)])
}

/// Per-position mixture chain (the positional generative model).
pub fn combine_gen_ngram(lambda: MixtureWeights, c: &PositionalComponents) -> f64 {
    let mut total = c.first;
    for row in &c.rest {
        total += log_mix(&[(lambda.u, row[0]), (lambda.b, row[1]), (lambda.w, row[2])]);
    }
    total
}

// ---------------------------------------------------------------------------
// Public scorer surface

fn check_query(index: &PositionalIndex, terms: &[String]) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::EmptyQuery);
    }
    if index.coll_tokens() == 0 {
        return Err(Error::EmptyCollection);
    }
    Ok(())
}

/// The lambda-independent score every model collapses to on one-term queries.
fn ql_value(
    index: &PositionalIndex,
    rq: &ResolvedQuery,
    doc: usize,
    mu: &SmoothingParams,
) -> Result<f64> {
    sum_unigram(index, &rq.unigram, doc, mu.mu_u)
}

pub fn score_mrf(
    index: &PositionalIndex,
    terms: &[String],
    doc_id: &str,
    lambda: MixtureWeights,
    features: FeatureKind,
    mu: &SmoothingParams,
    stopwords: &StopwordSet,
) -> Result<f64> {
    check_query(index, terms)?;
    lambda.validate_finite()?;
    let doc = index.doc_index(doc_id)?;
    let rq = resolve_query(index, terms, stopwords);
    if rq.len() == 1 {
        return ql_value(index, &rq, doc, mu);
    }
    let c = match features {
        FeatureKind::Bag => bag_components(index, &rq, doc, mu)?,
        FeatureKind::Ngram => ngram_linear_components(index, &rq, doc, mu)?,
    };
    Ok(combine_mrf(lambda, &c))
}

pub fn score_gen_bag(
    index: &PositionalIndex,
    terms: &[String],
    doc_id: &str,
    lambda: MixtureWeights,
    mu: &SmoothingParams,
    stopwords: &StopwordSet,
) -> Result<f64> {
    check_query(index, terms)?;
    lambda.validate_simplex()?;
    let doc = index.doc_index(doc_id)?;
    let rq = resolve_query(index, terms, stopwords);
    if rq.len() == 1 {
        return ql_value(index, &rq, doc, mu);
    }
    let c = bag_components(index, &rq, doc, mu)?;
    Ok(combine_gen_bag(lambda, &c))
}

pub fn score_gen_ngram(
    index: &PositionalIndex,
    terms: &[String],
    doc_id: &str,
    lambda: MixtureWeights,
    mu: &SmoothingParams,
    stopwords: &StopwordSet,
) -> Result<f64> {
    check_query(index, terms)?;
    lambda.validate_simplex()?;
    let doc = index.doc_index(doc_id)?;
    let rq = resolve_query(index, terms, stopwords);
    if rq.len() == 1 {
        return ql_value(index, &rq, doc, mu);
    }
    let c = ngram_positional_components(index, &rq, doc, mu)?;
    Ok(combine_gen_ngram(lambda, &c))
}

pub fn score_jm(
    index: &PositionalIndex,
    terms: &[String],
    doc_id: &str,
    jm: JMWeights,
    mu: &SmoothingParams,
    stopwords: &StopwordSet,
) -> Result<f64> {
    check_query(index, terms)?;
    jm.validate()?;
    let doc = index.doc_index(doc_id)?;
    let rq = resolve_query(index, terms, stopwords);
    if rq.len() == 1 {
        return ql_value(index, &rq, doc, mu);
    }
    let c = bag_components(index, &rq, doc, mu)?;
    Ok(combine_jm(jm, &c))
}

/// Score one (query, document) pair under any spec.
pub fn score(
    index: &PositionalIndex,
    terms: &[String],
    doc_id: &str,
    spec: &ScorerSpec,
    stopwords: &StopwordSet,
) -> Result<f64> {
    match spec.kind {
        ScorerKind::Ql => score_mrf(
            index,
            terms,
            doc_id,
            MixtureWeights::new(1.0, 0.0, 0.0),
            FeatureKind::Bag,
            &spec.mu,
            stopwords,
        ),
        ScorerKind::MrfSdm => score_mrf(
            index,
            terms,
            doc_id,
            spec.lambda,
            FeatureKind::Bag,
            &spec.mu,
            stopwords,
        ),
        ScorerKind::MrfNgram => score_mrf(
            index,
            terms,
            doc_id,
            spec.lambda,
            FeatureKind::Ngram,
            &spec.mu,
            stopwords,
        ),
        ScorerKind::GenSdm => score_gen_bag(index, terms, doc_id, spec.lambda, &spec.mu, stopwords),
        ScorerKind::GenNgram => {
            score_gen_ngram(index, terms, doc_id, spec.lambda, &spec.mu, stopwords)
        }
        ScorerKind::Jm => score_jm(index, terms, doc_id, spec.jm, &spec.mu, stopwords),
    }
}

// ---------------------------------------------------------------------------
// Ranking

pub const DEFAULT_CANDIDATE_K: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub query_id: String,
    /// (doc_id, score), score descending, ties by doc_id ascending.
    pub entries: Vec<(String, f64)>,
    /// Set when the query was empty after the pipeline; the ranking is empty.
    pub empty_query: bool,
}

fn sort_ranked(entries: &mut [(usize, f64)], index: &PositionalIndex) {
    entries.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.doc_id(a.0).cmp(index.doc_id(b.0)))
    });
}

/// Candidate generation by QL over the filtered query, then rescoring with
/// the requested model. Documents whose final score is -inf are unrankable
/// under the model and are dropped.
pub fn rank_query(
    index: &PositionalIndex,
    query: &Query,
    spec: &ScorerSpec,
    candidate_k: usize,
    stopwords: &StopwordSet,
) -> Result<Ranking> {
    spec.validate()?;
    if query.terms.is_empty() {
        return Ok(Ranking {
            query_id: query.query_id.clone(),
            entries: Vec::new(),
            empty_query: true,
        });
    }
    if index.coll_tokens() == 0 {
        return Err(Error::EmptyCollection);
    }
    let rq = resolve_query(index, &query.terms, stopwords);

    // QL pass over every document
    let mut candidates: Vec<(usize, f64)> = Vec::with_capacity(index.doc_count());
    for doc in 0..index.doc_count() {
        candidates.push((doc, ql_value(index, &rq, doc, &spec.mu)?));
    }
    sort_ranked(&mut candidates, index);
    candidates.truncate(candidate_k);

    // rescore under the target model
    let single = rq.len() == 1;
    let ql_like = single || matches!(spec.kind, ScorerKind::Ql);
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(candidates.len());
    for &(doc, ql) in &candidates {
        let s = if ql_like {
            ql
        } else {
            match spec.kind {
                ScorerKind::Ql => ql,
                ScorerKind::MrfSdm => combine_mrf(spec.lambda, &bag_components(index, &rq, doc, &spec.mu)?),
                ScorerKind::MrfNgram => {
                    combine_mrf(spec.lambda, &ngram_linear_components(index, &rq, doc, &spec.mu)?)
                }
                ScorerKind::GenSdm => {
                    combine_gen_bag(spec.lambda, &bag_components(index, &rq, doc, &spec.mu)?)
                }
                ScorerKind::GenNgram => combine_gen_ngram(
                    spec.lambda,
                    &ngram_positional_components(index, &rq, doc, &spec.mu)?,
                ),
                ScorerKind::Jm => combine_jm(spec.jm, &bag_components(index, &rq, doc, &spec.mu)?),
            }
        };
        if s > f64::NEG_INFINITY {
            scored.push((doc, s));
        }
    }
    sort_ranked(&mut scored, index);

    Ok(Ranking {
        query_id: query.query_id.clone(),
        entries: scored
            .into_iter()
            .map(|(doc, s)| (index.doc_id(doc).to_string(), s))
            .collect(),
        empty_query: false,
    })
}
