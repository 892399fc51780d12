//! The five smoothed log-probability building blocks. All natural log, f64.
//!
//! Zero-probability convention: when the smoothed numerator is zero (no doc
//! count and no collection mass, or mu = 0) the functions return -inf as an
//! explicit sentinel — never NaN, never a panic. Scorers decide what a -inf
//! component means for the combined score.

use crate::error::{Error, Result};
use crate::index::{CondPart, NormalizerMode, PairStats, UnigramStats};

/// Dirichlet scales per model family plus the normalizer mode they pair with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub mu_u: f64,
    pub mu_b: f64,
    pub mu_w: f64,
    pub mode: NormalizerMode,
}

impl SmoothingParams {
    pub fn new(mu_u: f64, mu_b: f64, mu_w: f64, mode: NormalizerMode) -> Result<SmoothingParams> {
        for (name, v) in [("mu_u", mu_u), ("mu_b", mu_b), ("mu_w", mu_w)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "{name} must be a nonnegative finite number, got {v}"
                )));
            }
        }
        Ok(SmoothingParams {
            mu_u,
            mu_b,
            mu_w,
            mode,
        })
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            mu_u: 1.0,
            mu_b: 1.0,
            mu_w: 1.0,
            mode: NormalizerMode::Exact,
        }
    }
}

/// log[(n + mu*ratio) / (norm + mu)]; -inf when the numerator has no mass.
#[inline]
fn dirichlet(n_doc: f64, doc_norm: f64, coll_ratio: f64, mu: f64) -> f64 {
    let num = n_doc + mu * coll_ratio;
    let den = doc_norm + mu;
    if num > 0.0 && den > 0.0 {
        (num / den).ln()
    } else {
        f64::NEG_INFINITY
    }
}

#[inline]
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Dirichlet-smoothed unigram log-probability.
/// Errors on an empty collection; that is the one unrecoverable state.
pub fn lm_unigram(stats: &UnigramStats, mu_u: f64) -> Result<f64> {
    if stats.coll_tokens == 0 {
        return Err(Error::EmptyCollection);
    }
    Ok(dirichlet(
        stats.n_doc as f64,
        stats.doc_len as f64,
        ratio(stats.n_coll, stats.coll_tokens),
        mu_u,
    ))
}

/// Bag-of-bigrams log-probability over adjacent ordered pairs.
/// A collection with no bigram mass (all single-token docs) yields -inf
/// rather than an error: the event space is empty, not the collection.
pub fn lm_bigram_bag(stats: &PairStats, mu_b: f64) -> f64 {
    dirichlet(
        stats.n_doc as f64,
        stats.doc_norm as f64,
        ratio(stats.n_coll, stats.coll_norm),
        mu_b,
    )
}

/// Bag log-probability over unordered within-window pairs.
pub fn lm_windowed_bag(stats: &PairStats, mu_w: f64) -> f64 {
    dirichlet(
        stats.n_doc as f64,
        stats.doc_norm as f64,
        ratio(stats.n_coll, stats.coll_norm),
        mu_w,
    )
}

/// Conditional bigram p(w | v, d): numerator counts restricted to prefix v,
/// denominator the prefix marginal. Collection ratio defined as 0 when the
/// prefix never occurs collection-wide.
pub fn lm_bigram_cond(stats: &CondPart, mu_b: f64) -> f64 {
    dirichlet(
        stats.pair_doc as f64,
        stats.prefix_doc as f64,
        ratio(stats.pair_coll, stats.prefix_coll),
        mu_b,
    )
}

/// Conditional windowed p(w | v, d) over directed events. The event space
/// around a prefix holds up to 2*(window-1) = 14 partners per occurrence, so
/// the Dirichlet scale enters as 14*mu to stay comparable with the bigram
/// family's mu. Uniform rescaling of all event counts cancels exactly.
pub fn lm_windowed_cond(stats: &CondPart, mu_w: f64, window: u32) -> f64 {
    let per_occurrence = 2.0 * (window as f64 - 1.0);
    let mu = per_occurrence * mu_w;
    dirichlet(
        stats.pair_doc as f64,
        stats.prefix_doc as f64,
        ratio(stats.pair_coll, stats.prefix_coll),
        mu,
    )
}
