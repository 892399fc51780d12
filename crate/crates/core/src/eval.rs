//! Rank-based effectiveness metrics and the cross-validation driver.
//!
//! Conventions follow trec_eval: binary relevance is grade > 0, unjudged
//! documents count as non-relevant everywhere except bpref (which skips
//! them), P@10 divides by 10 regardless of depth, and AP divides by the
//! total number of relevant documents whether retrieved or not.

use std::fmt::Write as _;

use crate::corpus::{FoldAssignment, Qrels, Query};
use crate::error::{Error, Result};
use crate::index::PositionalIndex;
use crate::learn::{two_phase_learn, LearnedParams, LearnerKind, MethodSpec, TrainSet};
use crate::scorer::{rank_query, Ranking, StopwordSet};

/// AP over an already-ranked list of relevance flags. `rel_total` counts all
/// relevant documents for the query, retrieved or not.
pub fn average_precision_flags(rels: impl Iterator<Item = bool>, rel_total: usize) -> f64 {
    if rel_total == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, rel) in rels.enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / rel_total as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub query_id: String,
    pub ap: f64,
    pub p10: f64,
    pub rr: f64,
    pub rprec: f64,
    pub bpref: f64,
}

/// All five metrics for one ranking in a single pass.
/// Requires at least one relevant document in the judgments.
pub fn metric_suite(ranking: &Ranking, qrels: &Qrels) -> Result<MetricRow> {
    let judged = qrels.for_query(&ranking.query_id);
    let r_total = judged.values().filter(|g| **g > 0).count();
    if r_total == 0 {
        return Err(Error::InvalidParam(format!(
            "query {} has no relevant documents; excluded from evaluation",
            ranking.query_id
        )));
    }
    let n_total = judged.len() - r_total;
    let bpref_denom = r_total.min(n_total.max(1)) as f64;

    let mut hits = 0usize;
    let mut ap_sum = 0.0;
    let mut p10_hits = 0usize;
    let mut rr = 0.0;
    let mut rprec_hits = 0usize;
    let mut judged_nonrel_above = 0usize;
    let mut bpref_sum = 0.0;

    for (rank0, (doc_id, _)) in ranking.entries.iter().enumerate() {
        let grade = judged.get(doc_id.as_str()).copied();
        let rel = matches!(grade, Some(g) if g > 0);
        if rel {
            hits += 1;
            ap_sum += hits as f64 / (rank0 + 1) as f64;
            if rank0 < 10 {
                p10_hits += 1;
            }
            if rr == 0.0 {
                rr = 1.0 / (rank0 + 1) as f64;
            }
            if rank0 < r_total {
                rprec_hits += 1;
            }
            bpref_sum += if n_total == 0 {
                1.0
            } else {
                1.0 - (judged_nonrel_above.min(r_total.min(n_total)) as f64) / bpref_denom
            };
        } else if grade.is_some() {
            judged_nonrel_above += 1;
        }
    }

    Ok(MetricRow {
        query_id: ranking.query_id.clone(),
        ap: ap_sum / r_total as f64,
        p10: p10_hits as f64 / 10.0,
        rr,
        rprec: rprec_hits as f64 / r_total as f64,
        bpref: bpref_sum / r_total as f64,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn mean_ap(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.ap).sum::<f64>() / self.rows.len() as f64
    }

    /// Arithmetic mean of every column, reported under query id "all".
    pub fn aggregate(&self) -> MetricRow {
        let n = self.rows.len().max(1) as f64;
        let mut agg = MetricRow {
            query_id: "all".to_string(),
            ap: 0.0,
            p10: 0.0,
            rr: 0.0,
            rprec: 0.0,
            bpref: 0.0,
        };
        for r in &self.rows {
            agg.ap += r.ap;
            agg.p10 += r.p10;
            agg.rr += r.rr;
            agg.rprec += r.rprec;
            agg.bpref += r.bpref;
        }
        agg.ap /= n;
        agg.p10 /= n;
        agg.rr /= n;
        agg.rprec /= n;
        agg.bpref /= n;
        agg
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("query_id\tap\tp10\trr\trprec\tbpref\n");
        for r in self.rows.iter().chain(std::iter::once(&self.aggregate())) {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                r.query_id, r.ap, r.p10, r.rr, r.rprec, r.bpref
            );
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Cross-validation

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub params: LearnedParams,
    pub report: MetricReport,
    /// Test-fold rankings in query input order, for run-file output.
    pub rankings: Vec<Ranking>,
}

#[derive(Debug, Clone)]
pub struct XvalResult {
    pub folds: Vec<FoldOutcome>,
    pub pooled: MetricReport,
}

/// Leave-one-fold-out estimation. Per fold: tune on the training queries
/// (multi-term only), score the held-out fold, pool per-query rows across
/// folds. Queries without a positive judgment are excluded throughout;
/// single-term queries are excluded from training but scored in test folds.
pub fn cross_validate(
    index: &PositionalIndex,
    queries: &[Query],
    qrels: &Qrels,
    folds: &FoldAssignment,
    method: &MethodSpec,
    learner: LearnerKind,
    stopwords: &StopwordSet,
) -> Result<XvalResult> {
    let evaluated: Vec<&Query> = queries
        .iter()
        .filter(|q| qrels.relevant_count(&q.query_id) > 0)
        .collect();
    if evaluated.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    for q in &evaluated {
        if !folds.assignment.contains_key(&q.query_id) {
            return Err(Error::BadFolds(format!(
                "query {} has judgments but no fold assignment",
                q.query_id
            )));
        }
    }

    let nf = folds.fold_count();
    let mut outcomes = Vec::with_capacity(nf);
    let mut pooled = MetricReport::default();
    for fold in 0..nf {
        let train_queries = evaluated
            .iter()
            .copied()
            .filter(|q| folds.assignment[&q.query_id] != fold);
        let train = match TrainSet::new(index, train_queries, qrels) {
            Ok(t) => t,
            Err(Error::EmptyTrainSet) => {
                return Err(Error::BadFolds(format!(
                    "fold {fold} leaves no multi-term training query"
                )))
            }
            Err(e) => return Err(e),
        };
        let params = two_phase_learn(&train, method, learner, stopwords)?;
        let spec = params.to_spec();

        let mut report = MetricReport::default();
        let mut rankings = Vec::new();
        for q in evaluated
            .iter()
            .filter(|q| folds.assignment[&q.query_id] == fold)
        {
            let ranking = rank_query(index, q, &spec, method.candidate_k, stopwords)?;
            report.rows.push(metric_suite(&ranking, qrels)?);
            rankings.push(ranking);
        }
        pooled.rows.extend(report.rows.iter().cloned());
        outcomes.push(FoldOutcome {
            fold,
            params,
            report,
            rankings,
        });
    }
    Ok(XvalResult {
        folds: outcomes,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;
    use std::path::Path;

    fn ranking(qid: &str, docs: &[&str]) -> Ranking {
        Ranking {
            query_id: qid.to_string(),
            entries: docs
                .iter()
                .enumerate()
                .map(|(i, d)| (d.to_string(), -(i as f64)))
                .collect(),
            empty_query: false,
        }
    }

    fn qrels_of(text: &str) -> Qrels {
        crate::corpus::parse_qrels(Path::new("mem"), text).unwrap()
    }

    /// Worked example: R=3 relevant, ranking hits at 1 and 3, one relevant
    /// unretrieved. AP = (1/1 + 2/3)/3.
    #[test]
    fn ap_worked_example() {
        let qrels = qrels_of("1 0 D1 1\n1 0 D2 1\n1 0 D3 1\n1 0 D4 0\n");
        let r = ranking("1", &["D1", "D4", "D2", "D5"]);
        let row = metric_suite(&r, &qrels).unwrap();
        let expect = (1.0 + 2.0 / 3.0) / 3.0;
        assert!((row.ap - expect).abs() < 1e-15, "{} vs {expect}", row.ap);
        assert_eq!(row.p10, 0.2);
        assert_eq!(row.rr, 1.0);
        // R-Prec: top 3 contains D1, D2 → 2/3
        assert!((row.rprec - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rr_zero_when_nothing_relevant_retrieved() {
        let qrels = qrels_of("1 0 D9 1\n");
        let r = ranking("1", &["D1", "D2"]);
        let row = metric_suite(&r, &qrels).unwrap();
        assert_eq!(row.rr, 0.0);
        assert_eq!(row.ap, 0.0);
        assert_eq!(row.bpref, 0.0);
    }

    #[test]
    fn p10_divides_by_ten_even_for_short_rankings() {
        let qrels = qrels_of("1 0 D1 1\n1 0 D2 1\n");
        let r = ranking("1", &["D1", "D2"]);
        let row = metric_suite(&r, &qrels).unwrap();
        assert_eq!(row.p10, 0.2);
    }

    /// bpref ignores unjudged docs between judged ones: with judgments
    /// R={D1,D3}, N={D2}, ranking D2 > Dx > D1 > D3 gives
    /// (1 - 1/min(2,1)) for D1 → 0, same for D3 → bpref 0; while AP sees Dx.
    #[test]
    fn bpref_skips_unjudged() {
        let qrels = qrels_of("1 0 D1 1\n1 0 D3 1\n1 0 D2 0\n");
        let r = ranking("1", &["D2", "DX", "D1", "D3"]);
        let row = metric_suite(&r, &qrels).unwrap();
        assert_eq!(row.bpref, 0.0);
        // swap: relevant first → full credit despite the unjudged doc
        let r = ranking("1", &["DX", "D1", "D3", "D2"]);
        let row = metric_suite(&r, &qrels).unwrap();
        assert_eq!(row.bpref, 1.0);
    }

    #[test]
    fn bpref_no_judged_nonrelevant_gives_full_terms() {
        let qrels = qrels_of("1 0 D1 1\n1 0 D2 1\n");
        let r = ranking("1", &["D9", "D1"]);
        let row = metric_suite(&r, &qrels).unwrap();
        // one of two relevant retrieved, N = 0 → term 1 → bpref 1/2
        assert_eq!(row.bpref, 0.5);
    }

    #[test]
    fn zero_positive_query_is_an_error() {
        let qrels = qrels_of("1 0 D1 0\n");
        let r = ranking("1", &["D1"]);
        assert!(metric_suite(&r, &qrels).is_err());
    }

    #[test]
    fn aggregate_is_columnwise_mean() {
        let qrels = qrels_of("1 0 D1 1\n2 0 D2 1\n");
        let mut rep = MetricReport::default();
        rep.rows
            .push(metric_suite(&ranking("1", &["D1"]), &qrels).unwrap());
        rep.rows
            .push(metric_suite(&ranking("2", &["DX", "D2"]), &qrels).unwrap());
        let agg = rep.aggregate();
        assert_eq!(agg.query_id, "all");
        assert!((agg.ap - 0.75).abs() < 1e-15);
        let tsv = rep.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("query_id\tap"));
        assert!(lines[3].starts_with("all\t0.7500"));
    }

    // -- randomized equivalence against naive reference implementations ----

    struct Instance {
        ranked: Vec<String>,
        judged: BTreeMap<String, u32>,
    }

    fn ref_ap(inst: &Instance) -> f64 {
        let r_total = inst.judged.values().filter(|g| **g > 0).count();
        let mut sum = 0.0;
        for k in 1..=inst.ranked.len() {
            let dk = &inst.ranked[k - 1];
            if inst.judged.get(dk).map(|g| *g > 0).unwrap_or(false) {
                let hits_at_k = inst.ranked[..k]
                    .iter()
                    .filter(|d| inst.judged.get(*d).map(|g| *g > 0).unwrap_or(false))
                    .count();
                sum += hits_at_k as f64 / k as f64;
            }
        }
        sum / r_total as f64
    }

    fn ref_p10(inst: &Instance) -> f64 {
        inst.ranked
            .iter()
            .take(10)
            .filter(|d| inst.judged.get(*d).map(|g| *g > 0).unwrap_or(false))
            .count() as f64
            / 10.0
    }

    fn ref_rr(inst: &Instance) -> f64 {
        for (i, d) in inst.ranked.iter().enumerate() {
            if inst.judged.get(d).map(|g| *g > 0).unwrap_or(false) {
                return 1.0 / (i + 1) as f64;
            }
        }
        0.0
    }

    fn ref_rprec(inst: &Instance) -> f64 {
        let r = inst.judged.values().filter(|g| **g > 0).count();
        inst.ranked
            .iter()
            .take(r)
            .filter(|d| inst.judged.get(*d).map(|g| *g > 0).unwrap_or(false))
            .count() as f64
            / r as f64
    }

    fn ref_bpref(inst: &Instance) -> f64 {
        let r = inst.judged.values().filter(|g| **g > 0).count();
        let n = inst.judged.values().filter(|g| **g == 0).count();
        let mut sum = 0.0;
        for (i, d) in inst.ranked.iter().enumerate() {
            if inst.judged.get(d).map(|g| *g > 0).unwrap_or(false) {
                let n_above = inst.ranked[..i]
                    .iter()
                    .filter(|x| inst.judged.get(*x).map(|g| *g == 0).unwrap_or(false))
                    .count();
                sum += if n == 0 {
                    1.0
                } else {
                    1.0 - (n_above.min(r.min(n)) as f64) / (r.min(n) as f64)
                };
            }
        }
        sum / r as f64
    }

    #[test]
    fn random_rankings_match_reference_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        while checked < 1000 {
            let n_docs = rng.gen_range(1..25usize);
            let docs: Vec<String> = (0..n_docs).map(|i| format!("D{i:02}")).collect();
            let mut judged = BTreeMap::new();
            for d in &docs {
                if rng.gen_bool(0.6) {
                    judged.insert(d.clone(), if rng.gen_bool(0.4) { rng.gen_range(1..3) } else { 0 });
                }
            }
            if !judged.values().any(|g| *g > 0) {
                continue;
            }
            let mut ranked = docs.clone();
            ranked.shuffle(&mut rng);
            ranked.truncate(rng.gen_range(0..=n_docs));
            let inst = Instance {
                ranked: ranked.clone(),
                judged: judged.clone(),
            };

            let mut qrels = Qrels::default();
            for (d, g) in &judged {
                qrels
                    .judgments
                    .insert(("q".to_string(), d.clone()), *g);
            }
            let r = Ranking {
                query_id: "q".to_string(),
                entries: ranked
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (d.clone(), -(i as f64)))
                    .collect(),
                empty_query: false,
            };
            let row = metric_suite(&r, &qrels).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
            assert!(close(row.ap, ref_ap(&inst)), "ap {} vs {}", row.ap, ref_ap(&inst));
            assert!(close(row.p10, ref_p10(&inst)));
            assert!(close(row.rr, ref_rr(&inst)));
            assert!(close(row.rprec, ref_rprec(&inst)));
            assert!(
                close(row.bpref, ref_bpref(&inst)),
                "bpref {} vs {} on {:?} / {:?}",
                row.bpref,
                ref_bpref(&inst),
                inst.ranked,
                inst.judged
            );
            for v in [row.ap, row.p10, row.rr, row.rprec, row.bpref] {
                assert!((0.0..=1.0).contains(&v));
            }
            checked += 1;
        }
    }

    // -- cross_validate ------------------------------------------------------

    use crate::corpus::TokenizedDoc;
    use crate::index::DEFAULT_WINDOW;
    use crate::scorer::ScorerKind;

    fn doc(id: &str, text: &str) -> TokenizedDoc {
        TokenizedDoc {
            doc_id: id.to_string(),
            tokens: text.split_whitespace().map(String::from).collect(),
        }
    }

    fn query(id: &str, text: &str) -> Query {
        Query {
            query_id: id.to_string(),
            terms: text.split_whitespace().map(String::from).collect(),
        }
    }

    fn folds_of(pairs: &[(&str, usize)]) -> FoldAssignment {
        FoldAssignment {
            assignment: pairs
                .iter()
                .map(|(q, f)| (q.to_string(), *f))
                .collect(),
        }
    }

    /// Two symmetric query groups; each fold trains on the other. Word order
    /// separates relevant from decoy, so the tuned bigram weight must be
    /// positive and every test query ranks its relevant doc first.
    #[test]
    fn xval_learns_order_sensitivity() {
        // Group A: query "a b"; DA1 has "a b", decoy DA0 has "b a".
        // Decoy ids sort before relevant ids, so a unigram tie loses.
        let docs = vec![
            doc("DA0", "b a x x"),
            doc("DA1", "a b y y"),
            doc("DB0", "d c x x"),
            doc("DB1", "c d y y"),
        ];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        let queries = vec![query("1", "a b"), query("2", "c d")];
        let qrels = qrels_of("1 0 DA1 1\n1 0 DA0 0\n2 0 DB1 1\n2 0 DB0 0\n");
        let folds = folds_of(&[("1", 0), ("2", 1)]);
        let mut method = MethodSpec::new(ScorerKind::MrfSdm, Default::default());
        method.grid_step = 0.5;
        let res = cross_validate(
            &index,
            &queries,
            &qrels,
            &folds,
            &method,
            LearnerKind::Grid,
            &StopwordSet::new(),
        )
        .unwrap();
        assert_eq!(res.folds.len(), 2);
        for f in &res.folds {
            assert!(
                f.params.lambda.b > 0.0 || f.params.lambda.w > 0.0,
                "fold {} learned {:?}",
                f.fold,
                f.params.lambda
            );
            assert_eq!(f.report.rows.len(), 1);
            assert_eq!(f.report.rows[0].ap, 1.0);
        }
        assert_eq!(res.pooled.rows.len(), 2);
        assert_eq!(res.pooled.aggregate().ap, 1.0);
    }

    #[test]
    fn xval_missing_fold_assignment_is_error() {
        let docs = vec![doc("D1", "a b"), doc("D2", "b a")];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        let queries = vec![query("1", "a b"), query("2", "a b")];
        let qrels = qrels_of("1 0 D1 1\n2 0 D1 1\n");
        let folds = folds_of(&[("1", 0)]);
        let method = MethodSpec::new(ScorerKind::Ql, Default::default());
        let err = cross_validate(
            &index,
            &queries,
            &qrels,
            &folds,
            &method,
            LearnerKind::Grid,
            &StopwordSet::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::BadFolds(_)), "{err}");
    }

    #[test]
    fn xval_single_term_only_training_fold_is_error() {
        let docs = vec![doc("D1", "a b"), doc("D2", "b a")];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        // fold 0 test = q2 (multi-term), train = q1 (single term) → error
        let queries = vec![query("1", "a"), query("2", "a b")];
        let qrels = qrels_of("1 0 D1 1\n2 0 D1 1\n");
        let folds = folds_of(&[("1", 1), ("2", 0)]);
        let method = MethodSpec::new(ScorerKind::MrfSdm, Default::default());
        let err = cross_validate(
            &index,
            &queries,
            &qrels,
            &folds,
            &method,
            LearnerKind::Grid,
            &StopwordSet::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::BadFolds(_)), "{err}");
    }

    /// Single-term queries score identically under every model (they all
    /// collapse to the unigram model), but they still appear in test folds.
    #[test]
    fn xval_single_term_query_kept_in_test() {
        let docs = vec![
            doc("D1", "a b c"),
            doc("D2", "b a d"),
            doc("D3", "e f g"),
        ];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        // multi-term query in each fold keeps both training sets legal
        let queries = vec![query("1", "a b"), query("2", "a"), query("3", "e f")];
        let qrels = qrels_of("1 0 D1 1\n2 0 D2 1\n3 0 D3 1\n");
        let folds = folds_of(&[("1", 1), ("2", 0), ("3", 0)]);
        let method = MethodSpec::new(ScorerKind::MrfSdm, Default::default());
        let res = cross_validate(
            &index,
            &queries,
            &qrels,
            &folds,
            &method,
            LearnerKind::Grid,
            &StopwordSet::new(),
        )
        .unwrap();
        let fold0 = &res.folds[0];
        let ids: Vec<&str> = fold0.report.rows.iter().map(|r| r.query_id.as_str()).collect();
        assert_eq!(ids, vec!["2", "3"]);
        assert_eq!(res.pooled.rows.len(), 3);
    }
}
