//! Two-phase parameter estimation: Dirichlet scales are tuned per language
//! model individually (max train MAP, ties to the smaller value), then the
//! mixture weights are selected by exhaustive simplex grid search or by
//! multi-start coordinate ascent on train MAP.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Qrels, Query};
use crate::error::{Error, Result};
use crate::eval::average_precision_flags;
use crate::index::{NormalizerMode, PositionalIndex};
use crate::lm::{
    lm_bigram_bag, lm_bigram_cond, lm_unigram, lm_windowed_bag, lm_windowed_cond, SmoothingParams,
};
use crate::scorer::{
    bag_components, combine_gen_bag, combine_gen_ngram, combine_jm, combine_mrf,
    jm_reparam, ngram_linear_components, ngram_positional_components, resolve_query,
    BagComponents, JMWeights, MixtureWeights, PositionalComponents, ResolvedQuery, ScorerKind,
    StopwordSet, DEFAULT_CANDIDATE_K,
};

/// Multi-term training queries with at least one positive judgment each.
/// Single-term queries are held out of training entirely (they score the
/// same under every model) but stay in test folds.
pub struct TrainSet<'a> {
    pub index: &'a PositionalIndex,
    pub queries: Vec<&'a Query>,
    pub qrels: &'a Qrels,
}

impl<'a> TrainSet<'a> {
    pub fn new(
        index: &'a PositionalIndex,
        queries: impl IntoIterator<Item = &'a Query>,
        qrels: &'a Qrels,
    ) -> Result<TrainSet<'a>> {
        let kept: Vec<&Query> = queries
            .into_iter()
            .filter(|q| q.terms.len() >= 2 && qrels.relevant_count(&q.query_id) > 0)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyTrainSet);
        }
        Ok(TrainSet {
            index,
            queries: kept,
            qrels,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Grid,
    Ascent,
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(LearnerKind::Grid),
            "ascent" => Ok(LearnerKind::Ascent),
            other => Err(Error::InvalidParam(format!(
                "unknown learner {other:?} (expected grid|ascent)"
            ))),
        }
    }
}

/// Everything the estimation protocol needs to know about one method.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub kind: ScorerKind,
    pub mode: NormalizerMode,
    pub mu_grid_u: Vec<f64>,
    pub mu_grid_b: Vec<f64>,
    pub mu_grid_w: Vec<f64>,
    pub grid_step: f64,
    pub restarts: usize,
    pub tol: f64,
    pub candidate_k: usize,
}

impl MethodSpec {
    pub fn new(kind: ScorerKind, mode: NormalizerMode) -> MethodSpec {
        MethodSpec {
            kind,
            mode,
            mu_grid_u: vec![1.0],
            mu_grid_b: vec![1.0],
            mu_grid_w: vec![1.0],
            grid_step: 0.05,
            restarts: 5,
            tol: 1e-6,
            candidate_k: DEFAULT_CANDIDATE_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedParams {
    pub kind: ScorerKind,
    pub lambda: MixtureWeights,
    pub jm: Option<JMWeights>,
    pub mu: SmoothingParams,
    pub train_map: f64,
}

impl LearnedParams {
    pub fn to_spec(&self) -> crate::scorer::ScorerSpec {
        use crate::scorer::ScorerSpec;
        match self.kind {
            ScorerKind::Ql => ScorerSpec::ql(self.mu),
            ScorerKind::Jm => {
                ScorerSpec::jm(self.jm.unwrap_or(JMWeights::new(1.0, 0.5)), self.mu)
            }
            _ => ScorerSpec::with_lambda(self.kind, self.lambda, self.mu),
        }
    }

    /// key=value serialization consumed by the run/xval plumbing.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model={}", self.kind.as_str());
        let _ = writeln!(s, "lambda_u={}", self.lambda.u);
        let _ = writeln!(s, "lambda_b={}", self.lambda.b);
        let _ = writeln!(s, "lambda_w={}", self.lambda.w);
        if let Some(jm) = self.jm {
            let _ = writeln!(s, "jm_u={}", jm.u);
            let _ = writeln!(s, "jm_b={}", jm.b);
        }
        let _ = writeln!(s, "mu_u={}", self.mu.mu_u);
        let _ = writeln!(s, "mu_b={}", self.mu.mu_b);
        let _ = writeln!(s, "mu_w={}", self.mu.mu_w);
        let _ = writeln!(s, "mode={}", self.mu.mode.as_str());
        let _ = writeln!(s, "train_map={}", self.train_map);
        s
    }
}

// ---------------------------------------------------------------------------
// Lambda grids

/// All lattice points of the probability simplex with the given step,
/// in lexicographic (lambda_u, lambda_b) order.
pub fn grid_simplex(step: f64) -> Result<Vec<MixtureWeights>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "grid step must lie in (0, 1], got {step}"
        )));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParam(format!(
            "grid step {step} does not divide 1"
        )));
    }
    let n = n as u32;
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            let k = n - i - j;
            out.push(MixtureWeights::new(
                i as f64 * step,
                j as f64 * step,
                k as f64 * step,
            ));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Objective: mean AP over the training queries as a function of the weights,
// with per-(query, candidate) components assembled once.

enum Comps {
    Bag(BagComponents),
    Pos(PositionalComponents),
    /// Single language model (mu tuning): the score is fixed per candidate.
    Fixed(f64),
}

struct ObjDoc {
    doc_id: String,
    rel: bool,
    comps: Comps,
}

struct ObjQuery {
    rel_total: usize,
    docs: Vec<ObjDoc>,
}

pub(crate) struct Objective {
    queries: Vec<ObjQuery>,
}

/// Rank all docs by the filtered-unigram score at mu_u, truncate to k.
fn ql_candidates(
    index: &PositionalIndex,
    rq: &ResolvedQuery,
    mu_u: f64,
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    let mut cands: Vec<(usize, f64)> = Vec::with_capacity(index.doc_count());
    for doc in 0..index.doc_count() {
        let mut s = 0.0;
        for &t in &rq.unigram {
            s += lm_unigram(&index.unigram_stats_at(doc, t), mu_u)?;
        }
        cands.push((doc, s));
    }
    cands.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.doc_id(a.0).cmp(index.doc_id(b.0)))
    });
    cands.truncate(k);
    Ok(cands)
}

/// What the mu-tuning phase scores a candidate with: one language model on
/// its own. Conditional families open with the unigram probability of the
/// first query term at the already-tuned unigram scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingleLm {
    Unigram { mu: f64 },
    BigramBag { mu: f64, mode: NormalizerMode },
    WindowedBag { mu: f64, mode: NormalizerMode },
    BigramCond { mu: f64, mu_u: f64 },
    WindowedCond { mu: f64, mu_u: f64 },
}

fn single_lm_score(
    index: &PositionalIndex,
    rq: &ResolvedQuery,
    doc: usize,
    single: SingleLm,
) -> Result<f64> {
    Ok(match single {
        SingleLm::Unigram { mu } => {
            let mut s = 0.0;
            for &t in &rq.unigram {
                s += lm_unigram(&index.unigram_stats_at(doc, t), mu)?;
            }
            s
        }
        SingleLm::BigramBag { mu, mode } => {
            let mut s = 0.0;
            for pair in rq.positions.windows(2) {
                s += lm_bigram_bag(&index.bigram_stats_at(doc, pair[0], pair[1], mode), mu);
            }
            s
        }
        SingleLm::WindowedBag { mu, mode } => {
            let mut s = 0.0;
            for pair in rq.positions.windows(2) {
                s += lm_windowed_bag(&index.windowed_stats_at(doc, pair[0], pair[1], mode), mu);
            }
            s
        }
        SingleLm::BigramCond { mu, mu_u } => {
            let mut s = lm_unigram(&index.unigram_stats_at(doc, rq.positions[0]), mu_u)?;
            for pair in rq.positions.windows(2) {
                s += lm_bigram_cond(&index.conditional_stats_at(doc, pair[0], pair[1]).bigram, mu);
            }
            s
        }
        SingleLm::WindowedCond { mu, mu_u } => {
            let mut s = lm_unigram(&index.unigram_stats_at(doc, rq.positions[0]), mu_u)?;
            for pair in rq.positions.windows(2) {
                s += lm_windowed_cond(
                    &index.conditional_stats_at(doc, pair[0], pair[1]).event,
                    mu,
                    index.window(),
                );
            }
            s
        }
    })
}

enum CompKind<'s> {
    ForFamily(ScorerKind, &'s SmoothingParams),
    Single(SingleLm),
}

fn build_objective(
    train: &TrainSet,
    comp: CompKind,
    mu_u_for_candidates: f64,
    candidate_k: usize,
    stopwords: &StopwordSet,
) -> Result<Objective> {
    let index = train.index;
    let mut queries = Vec::with_capacity(train.queries.len());
    for q in &train.queries {
        let rq = resolve_query(index, &q.terms, stopwords);
        let judged = train.qrels.for_query(&q.query_id);
        let rel_total = judged.values().filter(|g| **g > 0).count();
        let cands = ql_candidates(index, &rq, mu_u_for_candidates, candidate_k)?;
        let mut docs = Vec::with_capacity(cands.len());
        for (doc, _) in cands {
            let doc_id = index.doc_id(doc).to_string();
            let rel = judged.get(doc_id.as_str()).map(|g| *g > 0).unwrap_or(false);
            let comps = match comp {
                CompKind::ForFamily(kind, mu) => match kind {
                    ScorerKind::Ql => Comps::Fixed(single_lm_score(
                        index,
                        &rq,
                        doc,
                        SingleLm::Unigram { mu: mu.mu_u },
                    )?),
                    ScorerKind::MrfSdm | ScorerKind::GenSdm | ScorerKind::Jm => {
                        Comps::Bag(bag_components(index, &rq, doc, mu)?)
                    }
                    ScorerKind::MrfNgram => {
                        Comps::Bag(ngram_linear_components(index, &rq, doc, mu)?)
                    }
                    ScorerKind::GenNgram => {
                        Comps::Pos(ngram_positional_components(index, &rq, doc, mu)?)
                    }
                },
                CompKind::Single(single) => {
                    Comps::Fixed(single_lm_score(index, &rq, doc, single)?)
                }
            };
            docs.push(ObjDoc { doc_id, rel, comps });
        }
        queries.push(ObjQuery { rel_total, docs });
    }
    Ok(Objective { queries })
}

impl Objective {
    /// Mean AP under a weight assignment. Candidates scoring -inf are
    /// unrankable and drop out, exactly as in rank_query.
    fn map<F>(&self, score: F) -> f64
    where
        F: Fn(&Comps) -> f64,
    {
        let mut total = 0.0;
        for q in &self.queries {
            let mut scored: Vec<(usize, f64)> = q
                .docs
                .iter()
                .enumerate()
                .map(|(i, d)| (i, score(&d.comps)))
                .filter(|(_, s)| *s > f64::NEG_INFINITY)
                .collect();
            scored.sort_by(|a, b| {
                b.1.total_cmp(&a.1)
                    .then_with(|| q.docs[a.0].doc_id.cmp(&q.docs[b.0].doc_id))
            });
            total += average_precision_flags(
                scored.iter().map(|(i, _)| q.docs[*i].rel),
                q.rel_total,
            );
        }
        total / self.queries.len() as f64
    }

    fn map_lambda(&self, kind: ScorerKind, lambda: MixtureWeights) -> f64 {
        self.map(|c| match c {
            Comps::Bag(b) => match kind {
                ScorerKind::GenSdm => combine_gen_bag(lambda, b),
                _ => combine_mrf(lambda, b),
            },
            Comps::Pos(p) => combine_gen_ngram(lambda, p),
            Comps::Fixed(s) => *s,
        })
    }

    fn map_jm(&self, jm: JMWeights) -> f64 {
        self.map(|c| match c {
            Comps::Bag(b) => combine_jm(jm, b),
            Comps::Pos(_) => f64::NEG_INFINITY,
            Comps::Fixed(s) => *s,
        })
    }
}

// ---------------------------------------------------------------------------
// mu tuning

/// Exhaustive search of a mu grid for one language model; ties go to the
/// smaller mu. `mu_u_fixed` feeds candidate generation and the conditional
/// families' first-term fallback.
pub fn tune_mu(
    train: &TrainSet,
    family: impl Fn(f64) -> SingleLm,
    mu_grid: &[f64],
    mu_u_for_candidates: f64,
    candidate_k: usize,
    stopwords: &StopwordSet,
) -> Result<(f64, f64)> {
    if mu_grid.is_empty() {
        return Err(Error::InvalidParam("empty mu grid".into()));
    }
    let mut grid: Vec<f64> = mu_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for &mu in &grid {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidParam(format!("bad mu grid value {mu}")));
        }
        let single = family(mu);
        // When the unigram scale itself is being tuned, candidate generation
        // uses the value under test — it IS the ranking model.
        let cand_mu = match single {
            SingleLm::Unigram { mu } => mu,
            _ => mu_u_for_candidates,
        };
        let obj = build_objective(
            train,
            CompKind::Single(single),
            cand_mu,
            candidate_k,
            stopwords,
        )?;
        let m = obj.map(|c| match c {
            Comps::Fixed(s) => *s,
            _ => unreachable!("single-LM objective"),
        });
        match best {
            Some((_, bm)) if m <= bm => {}
            _ => best = Some((mu, m)),
        }
    }
    Ok(best.expect("nonempty grid"))
}

// ---------------------------------------------------------------------------
// lambda search

/// Exhaustive grid evaluation; ties keep the first (lexicographically
/// smallest) grid point.
pub fn grid_search(
    train: &TrainSet,
    kind: ScorerKind,
    mu: &SmoothingParams,
    lambdas: &[MixtureWeights],
    candidate_k: usize,
    stopwords: &StopwordSet,
) -> Result<(MixtureWeights, f64)> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParam("empty lambda grid".into()));
    }
    let obj = build_objective(
        train,
        CompKind::ForFamily(kind, mu),
        mu.mu_u,
        candidate_k,
        stopwords,
    )?;
    let mut best = lambdas[0];
    let mut best_map = obj.map_lambda(kind, best);
    for &lam in &lambdas[1..] {
        let m = obj.map_lambda(kind, lam);
        if m > best_map {
            best_map = m;
            best = lam;
        }
    }
    Ok((best, best_map))
}

/// Line-search candidate values for one coordinate: fixed geometric points,
/// the full 0.05 lattice, and small perturbations of the current value, all
/// clamped into [0,1].
fn coord_candidates(cur: f64) -> Vec<f64> {
    let mut v = vec![0.0, 1e-3, 1e-2];
    for k in 0..=20 {
        v.push(0.05 * k as f64);
    }
    for d in [0.01, 0.001] {
        v.push((cur + d).clamp(0.0, 1.0));
        v.push((cur - d).clamp(0.0, 1.0));
    }
    v
}

/// Set coordinate j to c and rescale the other two proportionally so the
/// triple stays on the simplex (equal split when both others are zero).
fn set_coord(lam: [f64; 3], j: usize, c: f64) -> [f64; 3] {
    let mut out = lam;
    let rem = 1.0 - c;
    let others: f64 = lam.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| v).sum();
    for i in 0..3 {
        if i == j {
            out[i] = c;
        } else if others > 0.0 {
            out[i] = lam[i] / others * rem;
        } else {
            out[i] = rem / 2.0;
        }
    }
    out
}

fn ascent_starts(restarts: usize, dims: usize) -> Vec<[f64; 3]> {
    let mut starts: Vec<[f64; 3]> = if dims == 3 {
        vec![
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ]
    } else {
        vec![
            [1.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0],
            [0.5, 0.5, 0.0],
        ]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5d_5eed);
    while starts.len() < restarts {
        if dims == 3 {
            // uniform over the simplex via sorted uniforms
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            starts.push([lo, hi - lo, 1.0 - hi]);
        } else {
            starts.push([rng.gen(), rng.gen(), 0.0]);
        }
    }
    starts.truncate(restarts.max(1));
    starts
}

const MAX_SWEEPS: usize = 50;

/// Greedy coordinate ascent over the simplex for an arbitrary objective.
/// Deterministic: fixed start sequence, fixed candidate order, strict
/// improvement only (a tie keeps the incumbent).
pub(crate) fn coordinate_ascent_simplex<F>(
    objective: F,
    restarts: usize,
    tol: f64,
) -> ([f64; 3], f64)
where
    F: Fn(&[f64; 3]) -> f64,
{
    let mut overall: Option<([f64; 3], f64)> = None;
    for start in ascent_starts(restarts, 3) {
        let mut cur = start;
        let mut cur_val = objective(&cur);
        for _ in 0..MAX_SWEEPS {
            let sweep_start = cur_val;
            for j in 0..3 {
                let mut best = cur;
                let mut best_val = cur_val;
                for c in coord_candidates(cur[j]) {
                    let cand = set_coord(cur, j, c);
                    let v = objective(&cand);
                    if v > best_val {
                        best_val = v;
                        best = cand;
                    }
                }
                cur = best;
                cur_val = best_val;
            }
            if cur_val - sweep_start < tol {
                break;
            }
        }
        match overall {
            Some((_, v)) if cur_val <= v => {}
            _ => overall = Some((cur, cur_val)),
        }
    }
    overall.expect("at least one start")
}

/// Box-constrained variant for the two nested JM weights (no renormalization).
fn coordinate_ascent_box2<F>(objective: F, restarts: usize, tol: f64) -> ([f64; 2], f64)
where
    F: Fn(&[f64; 2]) -> f64,
{
    let mut overall: Option<([f64; 2], f64)> = None;
    for start in ascent_starts(restarts, 2) {
        let mut cur = [start[0], start[1]];
        let mut cur_val = objective(&cur);
        for _ in 0..MAX_SWEEPS {
            let sweep_start = cur_val;
            for j in 0..2 {
                let mut best = cur;
                let mut best_val = cur_val;
                for c in coord_candidates(cur[j]) {
                    let mut cand = cur;
                    cand[j] = c;
                    let v = objective(&cand);
                    if v > best_val {
                        best_val = v;
                        best = cand;
                    }
                }
                cur = best;
                cur_val = best_val;
            }
            if cur_val - sweep_start < tol {
                break;
            }
        }
        match overall {
            Some((_, v)) if cur_val <= v => {}
            _ => overall = Some((cur, cur_val)),
        }
    }
    overall.expect("at least one start")
}

/// Coordinate ascent on train MAP for one scorer family.
pub fn coordinate_ascent(
    train: &TrainSet,
    kind: ScorerKind,
    mu: &SmoothingParams,
    restarts: usize,
    tol: f64,
    candidate_k: usize,
    stopwords: &StopwordSet,
) -> Result<(MixtureWeights, f64)> {
    if restarts == 0 {
        return Err(Error::InvalidParam("restarts must be >= 1".into()));
    }
    let obj = build_objective(
        train,
        CompKind::ForFamily(kind, mu),
        mu.mu_u,
        candidate_k,
        stopwords,
    )?;
    let (lam, map) = coordinate_ascent_simplex(
        |l| obj.map_lambda(kind, MixtureWeights::new(l[0], l[1], l[2])),
        restarts,
        tol,
    );
    Ok((MixtureWeights::new(lam[0], lam[1], lam[2]), map))
}

// ---------------------------------------------------------------------------
// Two-phase protocol

/// mu per model family first, then the mixture weights.
pub fn two_phase_learn(
    train: &TrainSet,
    method: &MethodSpec,
    learner: LearnerKind,
    stopwords: &StopwordSet,
) -> Result<LearnedParams> {
    let k = method.candidate_k;
    let (mu_u, ql_map) = tune_mu(
        train,
        |mu| SingleLm::Unigram { mu },
        &method.mu_grid_u,
        // candidate generation for unigram tuning is the scorer itself
        f64::NAN,
        k,
        stopwords,
    )?;
    let mode = method.mode;

    if method.kind == ScorerKind::Ql {
        return Ok(LearnedParams {
            kind: method.kind,
            lambda: MixtureWeights::new(1.0, 0.0, 0.0),
            jm: None,
            mu: SmoothingParams::new(mu_u, 1.0, 1.0, mode)?,
            train_map: ql_map,
        });
    }

    let conditional = matches!(method.kind, ScorerKind::GenNgram | ScorerKind::MrfNgram);
    let (mu_b, _) = tune_mu(
        train,
        |mu| {
            if conditional {
                SingleLm::BigramCond { mu, mu_u }
            } else {
                SingleLm::BigramBag { mu, mode }
            }
        },
        &method.mu_grid_b,
        mu_u,
        k,
        stopwords,
    )?;
    let (mu_w, _) = tune_mu(
        train,
        |mu| {
            if conditional {
                SingleLm::WindowedCond { mu, mu_u }
            } else {
                SingleLm::WindowedBag { mu, mode }
            }
        },
        &method.mu_grid_w,
        mu_u,
        k,
        stopwords,
    )?;
    let mu = SmoothingParams::new(mu_u, mu_b, mu_w, mode)?;

    if method.kind == ScorerKind::Jm {
        let obj = build_objective(train, CompKind::ForFamily(method.kind, &mu), mu_u, k, stopwords)?;
        let (jm, map) = match learner {
            LearnerKind::Grid => {
                let n = (1.0 / method.grid_step).round() as u32;
                let mut best: Option<(JMWeights, f64)> = None;
                for i in 0..=n {
                    for j in 0..=n {
                        let jm = JMWeights::new(
                            i as f64 * method.grid_step,
                            j as f64 * method.grid_step,
                        );
                        let m = obj.map_jm(jm);
                        match best {
                            Some((_, bm)) if m <= bm => {}
                            _ => best = Some((jm, m)),
                        }
                    }
                }
                best.expect("nonempty jm grid")
            }
            LearnerKind::Ascent => {
                let (w, m) = coordinate_ascent_box2(
                    |v| obj.map_jm(JMWeights::new(v[0], v[1])),
                    method.restarts,
                    method.tol,
                );
                (JMWeights::new(w[0], w[1]), m)
            }
        };
        return Ok(LearnedParams {
            kind: method.kind,
            lambda: jm_reparam(jm),
            jm: Some(jm),
            mu,
            train_map: map,
        });
    }

    let (lambda, map) = match learner {
        LearnerKind::Grid => {
            let grid = grid_simplex(method.grid_step)?;
            grid_search(train, method.kind, &mu, &grid, k, stopwords)?
        }
        LearnerKind::Ascent => coordinate_ascent(
            train,
            method.kind,
            &mu,
            method.restarts,
            method.tol,
            k,
            stopwords,
        )?,
    };
    Ok(LearnedParams {
        kind: method.kind,
        lambda,
        jm: None,
        mu,
        train_map: map,
    })
}

/// Parse the key=value parameter format written by `LearnedParams::to_kv`.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParam(format!("bad key=value line {}: {line:?}", i + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizedDoc;
    use crate::index::{PositionalIndex, DEFAULT_WINDOW};
    use std::path::Path;

    fn no_stop() -> StopwordSet {
        StopwordSet::new()
    }

    #[test]
    fn grid_counts() {
        assert_eq!(grid_simplex(1.0).unwrap().len(), 3);
        assert_eq!(grid_simplex(0.5).unwrap().len(), 6);
        assert_eq!(grid_simplex(0.05).unwrap().len(), 231);
    }

    #[test]
    fn grid_order_and_validity() {
        let g = grid_simplex(1.0).unwrap();
        assert_eq!(g[0], MixtureWeights::new(0.0, 0.0, 1.0));
        assert_eq!(g[1], MixtureWeights::new(0.0, 1.0, 0.0));
        assert_eq!(g[2], MixtureWeights::new(1.0, 0.0, 0.0));
        let g = grid_simplex(0.05).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for lam in &g {
            lam.validate_simplex().unwrap();
            assert!(seen.insert(format!("{:.6},{:.6}", lam.u, lam.b)), "duplicate {lam:?}");
        }
        // lexicographic ordering
        for w in g.windows(2) {
            assert!(
                (w[0].u, w[0].b) < (w[1].u, w[1].b),
                "not lexicographic: {w:?}"
            );
        }
    }

    #[test]
    fn grid_rejects_bad_steps() {
        assert!(grid_simplex(0.0).is_err());
        assert!(grid_simplex(1.5).is_err());
        assert!(grid_simplex(0.3).is_err());
    }

    #[test]
    fn ascent_surrogate_quadratic() {
        let (lam, _) = coordinate_ascent_simplex(
            |l| -(l[0] - 0.7).powi(2) - (l[1] - 0.2).powi(2),
            5,
            1e-6,
        );
        assert!((lam[0] - 0.7).abs() < 0.01, "{lam:?}");
        assert!((lam[1] - 0.2).abs() < 0.01, "{lam:?}");
        assert!((lam[2] - 0.1).abs() < 0.02, "{lam:?}");
    }

    #[test]
    fn ascent_constant_objective_keeps_first_start() {
        let (lam, v) = coordinate_ascent_simplex(|_| 0.25, 5, 1e-6);
        assert_eq!(lam, [1.0, 0.0, 0.0]);
        assert_eq!(v, 0.25);
    }

    #[test]
    fn ascent_is_deterministic() {
        let f = |l: &[f64; 3]| -(l[0] - 0.42).powi(2) - (l[2] - 0.3).powi(2);
        let a = coordinate_ascent_simplex(f, 7, 1e-6);
        let b = coordinate_ascent_simplex(f, 7, 1e-6);
        assert_eq!(a, b);
    }

    #[test]
    fn set_coord_renormalizes() {
        let out = set_coord([0.5, 0.3, 0.2], 0, 0.8);
        assert!((out[0] - 0.8).abs() < 1e-15);
        assert!((out[1] - 0.12).abs() < 1e-12);
        assert!((out[2] - 0.08).abs() < 1e-12);
        // both others zero → equal split
        let out = set_coord([1.0, 0.0, 0.0], 0, 0.6);
        assert!((out[1] - 0.2).abs() < 1e-15);
        assert!((out[2] - 0.2).abs() < 1e-15);
    }

    /// Corpus where relevance follows raw term frequency and all docs share a
    /// length: every mu produces the same ranking, so the tie rule picks the
    /// smallest grid value.
    #[test]
    fn tune_mu_tie_takes_smaller() {
        let docs = vec![
            doc("DA", "t t u u"),
            doc("DB", "t u u u"),
            doc("DC", "u u u u"),
        ];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        let queries = vec![query("1", "t u")];
        let qrels = crate::corpus::parse_qrels(
            Path::new("mem"),
            "1 0 DA 1\n1 0 DB 0\n1 0 DC 0\n",
        )
        .unwrap();
        let train = TrainSet::new(&index, &queries, &qrels).unwrap();
        let (mu, map) = tune_mu(
            &train,
            |mu| SingleLm::Unigram { mu },
            &[100.0, 0.5, 10.0],
            f64::NAN,
            1000,
            &no_stop(),
        )
        .unwrap();
        assert_eq!(mu, 0.5);
        assert_eq!(map, 1.0);
    }

    /// Long relevant doc vs short non-relevant doc sharing the query term:
    /// light smoothing prefers the short doc, heavy smoothing the long one.
    #[test]
    fn tune_mu_crafted_qrels_prefer_heavy_smoothing() {
        let mut docs = vec![
            doc("DLONG", "t t t f f f f f f f"),
            doc("DSHORT", "t f"),
        ];
        for i in 0..5 {
            docs.push(doc(&format!("BG{i}"), "f f f f f f"));
        }
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        let queries = vec![query("1", "t f")];
        let qrels = crate::corpus::parse_qrels(
            Path::new("mem"),
            "1 0 DLONG 1\n1 0 DSHORT 0\n",
        )
        .unwrap();
        let train = TrainSet::new(&index, &queries, &qrels).unwrap();
        let (mu, _) = tune_mu(
            &train,
            |mu| SingleLm::Unigram { mu },
            &[0.1, 100.0],
            f64::NAN,
            1000,
            &no_stop(),
        )
        .unwrap();
        assert_eq!(mu, 100.0);
    }

    #[test]
    fn tune_mu_is_exhaustive() {
        let docs = vec![doc("DA", "t u x y"), doc("DB", "u t t x"), doc("DC", "x y x y")];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        let queries = vec![query("1", "t u"), query("2", "x y")];
        let qrels = crate::corpus::parse_qrels(
            Path::new("mem"),
            "1 0 DA 1\n1 0 DB 0\n2 0 DC 1\n2 0 DA 0\n",
        )
        .unwrap();
        let train = TrainSet::new(&index, &queries, &qrels).unwrap();
        let grid = [0.2, 1.0, 5.0, 25.0];
        let (best_mu, best_map) = tune_mu(
            &train,
            |mu| SingleLm::Unigram { mu },
            &grid,
            f64::NAN,
            1000,
            &no_stop(),
        )
        .unwrap();
        for mu in grid {
            let (_, m) = tune_mu(
                &train,
                |m| SingleLm::Unigram { mu: m },
                &[mu],
                f64::NAN,
                1000,
                &no_stop(),
            )
            .unwrap();
            assert!(best_map >= m, "mu={mu} beat the winner");
            if mu == best_mu {
                assert_eq!(m, best_map);
            }
        }
    }

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

    /// Unigram signal favors the relevant doc by a whisker (ln 6.20 - ln 5.20
    /// with mu = 1); the decoy wins every proximity feature by ~4 nats, so
    /// even 0.05 of bigram or window weight flips the pair. The unigram
    /// corner is the unique maximizer — the assertion does not rely on the
    /// grid's tie rule.
    #[test]
    fn grid_search_finds_unigram_corner() {
        let dr = "t t t t t t x1 x2 x3 x4 x5 x6 x7 u f1 f2 f3 f4 f5 f6 f7 f8 f9 f10 f11 f12 f13 f14";
        let dn = "t u t t t t p1 p2 p3 p4 p5 p6 p7 p8 p9 p10 p11 p12 p13 p14 p15 p16 p17 p18 p19 p20 p21 p22";
        let docs = vec![doc("DN", dn), doc("DR", dr)];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        let queries = vec![query("1", "t u")];
        let qrels =
            crate::corpus::parse_qrels(Path::new("mem"), "1 0 DR 1\n1 0 DN 0\n").unwrap();
        let train = TrainSet::new(&index, &queries, &qrels).unwrap();
        let mu = SmoothingParams::default();
        let grid = grid_simplex(0.05).unwrap();
        let (lam, map) = grid_search(
            &train,
            ScorerKind::MrfSdm,
            &mu,
            &grid,
            1000,
            &no_stop(),
        )
        .unwrap();
        assert_eq!((lam.u, lam.b, lam.w), (1.0, 0.0, 0.0), "map={map}");
        assert_eq!(map, 1.0);
    }

    #[test]
    fn grid_search_degenerate_grid() {
        let docs = vec![doc("DA", "t u v"), doc("DB", "v u t")];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        let queries = vec![query("1", "t u")];
        let qrels =
            crate::corpus::parse_qrels(Path::new("mem"), "1 0 DA 1\n1 0 DB 0\n").unwrap();
        let train = TrainSet::new(&index, &queries, &qrels).unwrap();
        let point = vec![MixtureWeights::new(0.6, 0.3, 0.1)];
        let (lam, _) = grid_search(
            &train,
            ScorerKind::MrfSdm,
            &SmoothingParams::default(),
            &point,
            1000,
            &no_stop(),
        )
        .unwrap();
        assert_eq!(lam, point[0]);
    }

    #[test]
    fn train_set_excludes_single_term_and_no_positive() {
        let docs = vec![doc("DA", "t u"), doc("DB", "u t")];
        let index = PositionalIndex::build(docs, DEFAULT_WINDOW).unwrap();
        let queries = vec![query("1", "t u"), query("2", "t"), query("3", "t u")];
        let qrels = crate::corpus::parse_qrels(
            Path::new("mem"),
            "1 0 DA 1\n2 0 DA 1\n3 0 DA 0\n",
        )
        .unwrap();
        let train = TrainSet::new(&index, &queries, &qrels).unwrap();
        assert_eq!(train.queries.len(), 1);
        assert_eq!(train.queries[0].query_id, "1");

        let only_bad = vec![query("2", "t")];
        assert!(matches!(
            TrainSet::new(&index, &only_bad, &qrels),
            Err(Error::EmptyTrainSet)
        ));
    }

    #[test]
    fn kv_roundtrip() {
        let p = LearnedParams {
            kind: ScorerKind::MrfSdm,
            lambda: MixtureWeights::new(0.85, 0.1, 0.05),
            jm: None,
            mu: SmoothingParams::default(),
            train_map: 0.5,
        };
        let kv = parse_kv(&p.to_kv()).unwrap();
        assert_eq!(kv["model"], "mrfSDM");
        assert_eq!(kv["lambda_u"], "0.85");
        assert_eq!(kv["mode"], "exact");
        assert_eq!(kv["train_map"], "0.5");
    }
}
