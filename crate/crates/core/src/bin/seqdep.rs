//! Command-line front end: index building, batch retrieval runs, parameter
//! tuning, evaluation, cross-validation, and self-verification.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 verification
//! failure. A `key=value` config file may supply any flag; values given on
//! the command line win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use seqdep::config::Config;
use seqdep::corpus::{load_corpus, load_folds, load_qrels, load_queries, CorpusFormat};
use seqdep::error::{Error, Result};
use seqdep::eval::{cross_validate, metric_suite, MetricReport};
use seqdep::index::{NormalizerMode, PositionalIndex, DEFAULT_WINDOW};
use seqdep::learn::{two_phase_learn, LearnerKind, MethodSpec, TrainSet};
use seqdep::lm::{lm_unigram, SmoothingParams};
use seqdep::oracle::{exhaustive_equivalence, random_count_check, random_factor_graph_check, SweepConfig};
use seqdep::pipeline::{load_stopwords, PipelineConfig};
use seqdep::runfile::{read_run_file, write_run_file};
use seqdep::scorer::{
    JMWeights, MixtureWeights, Ranking, ScorerKind, ScorerSpec, StopwordSet, DEFAULT_CANDIDATE_K,
};

#[derive(Parser)]
#[command(
    name = "seqdep",
    version,
    about = "Sequential-dependence retrieval: indexing, scoring, tuning, evaluation"
)]
struct Cli {
    /// key=value file supplying a default for any long flag
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tokenize a corpus and write a positional index
    BuildIndex(BuildIndexArgs),
    /// Score queries against an index and write a TREC run file
    Run(RunArgs),
    /// Learn smoothing scales and mixture weights on judged queries
    Tune(TuneArgs),
    /// Score a run file against relevance judgments
    Eval(EvalArgs),
    /// Cross-validated tuning and evaluation; writes run files and reports
    Xval(XvalArgs),
    /// Re-run the internal consistency oracles
    Verify(VerifyArgs),
    /// Print index statistics
    DumpStats(DumpStatsArgs),
    /// Print smoothed unigram details for one term/document pair
    ScoreTerm(ScoreTermArgs),
}

#[derive(Args)]
struct BuildIndexArgs {
    /// Corpus file (.jsonl with {"id","text"} records, or TRECTEXT)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output index path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Co-occurrence window width
    #[arg(long)]
    window: Option<u32>,
    /// Force the corpus format: jsonl | trectext (default: sniff extension)
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    /// Queries TSV: qid<TAB>query text
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Output run file
    #[arg(long)]
    out: Option<PathBuf>,
    /// QL | mrfSDM | genSDM | genNGram | mrfNGram | JM
    #[arg(long)]
    model: Option<String>,
    /// Mixture weights u,b,w (simplex)
    #[arg(long)]
    lambda: Option<String>,
    /// Nested mixture weights u,b for the JM model
    #[arg(long)]
    jm: Option<String>,
    /// Dirichlet scales u,b,w
    #[arg(long)]
    mu: Option<String>,
    /// Pair-model normalizers: exact | galago_approx
    #[arg(long)]
    mode: Option<String>,
    /// Stopword list path, or "none"
    #[arg(long)]
    stopwords: Option<String>,
    /// Run tag written in column six
    #[arg(long)]
    tag: Option<String>,
    /// Candidate pool size per query
    #[arg(long)]
    candidates: Option<usize>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Relevance judgments: qid 0 docid grade
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// grid | ascent
    #[arg(long)]
    learner: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    /// Candidate Dirichlet scales for the unigram model, comma-separated
    #[arg(long)]
    mu_grid_u: Option<String>,
    #[arg(long)]
    mu_grid_b: Option<String>,
    #[arg(long)]
    mu_grid_w: Option<String>,
    /// Simplex lattice step for the grid learner
    #[arg(long)]
    grid_step: Option<f64>,
    /// Restart count for the ascent learner
    #[arg(long)]
    restarts: Option<usize>,
    /// Convergence tolerance on train MAP for the ascent learner
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    stopwords: Option<String>,
    /// Write learned parameters here (key=value); default prints to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Run file to evaluate
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Write the TSV report here; default prints to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct XvalArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Fold assignment: qid<SPACE>fold
    #[arg(long)]
    folds: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    learner: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    mu_grid_u: Option<String>,
    #[arg(long)]
    mu_grid_b: Option<String>,
    #[arg(long)]
    mu_grid_w: Option<String>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    stopwords: Option<String>,
    #[arg(long)]
    tag: Option<String>,
    /// Directory for run files, per-fold reports, and the pooled report
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Corpora for the randomized count-oracle phase (0 skips)
    #[arg(long)]
    count_corpora: Option<usize>,
    /// Instances for the randomized factor-graph phase (0 skips)
    #[arg(long)]
    fg_instances: Option<usize>,
    /// Base seed for the randomized phases
    #[arg(long)]
    seed: Option<u64>,
    /// Exhaustive sweep: vocabulary size
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long)]
    max_doc_len: Option<usize>,
    #[arg(long)]
    max_query_len: Option<usize>,
    /// Points per axis of the nested-weight grid
    #[arg(long)]
    lambda_points: Option<usize>,
    #[arg(long)]
    window: Option<u32>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    theorem1_stride: Option<u64>,
    #[arg(long)]
    collapse_stride: Option<u64>,
    /// Deliberately corrupt the sweep; verification must fail (self-test)
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct DumpStatsArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    /// Write the TSV here; default prints to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreTermArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    /// Document id
    #[arg(long)]
    doc: Option<String>,
    /// Term (passed through the text pipeline)
    #[arg(long)]
    term: Option<String>,
    /// Unigram Dirichlet scale
    #[arg(long)]
    mu: Option<f64>,
}

// ---------------------------------------------------------------------------
// flag parsing helpers

fn bad(msg: String) -> Error {
    Error::InvalidParam(msg)
}

fn parse_path(s: &str) -> Result<PathBuf> {
    Ok(PathBuf::from(s))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("expected a number, got {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("expected a non-negative integer, got {s:?}")))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("expected a non-negative integer, got {s:?}")))
}

fn parse_u32(s: &str) -> Result<u32> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("expected a non-negative integer, got {s:?}")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(bad(format!("expected true/false, got {other:?}"))),
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let vals: Result<Vec<f64>> = s.split(',').map(parse_f64).collect();
    let vals = vals?;
    if vals.is_empty() {
        return Err(bad(format!("expected a comma-separated list, got {s:?}")));
    }
    Ok(vals)
}

fn parse_lambda(s: &str) -> Result<MixtureWeights> {
    let v = parse_f64_list(s)?;
    if v.len() != 3 {
        return Err(bad(format!("--lambda needs three values u,b,w, got {s:?}")));
    }
    Ok(MixtureWeights::new(v[0], v[1], v[2]))
}

fn parse_jm(s: &str) -> Result<JMWeights> {
    let v = parse_f64_list(s)?;
    if v.len() != 2 {
        return Err(bad(format!("--jm needs two values u,b, got {s:?}")));
    }
    Ok(JMWeights::new(v[0], v[1]))
}

fn parse_mu_triple(s: &str) -> Result<(f64, f64, f64)> {
    let v = parse_f64_list(s)?;
    if v.len() != 3 {
        return Err(bad(format!("--mu needs three values u,b,w, got {s:?}")));
    }
    Ok((v[0], v[1], v[2]))
}

fn parse_mode(s: &str) -> Result<NormalizerMode> {
    s.parse()
}

fn parse_model(s: &str) -> Result<ScorerKind> {
    s.parse()
}

fn parse_learner(s: &str) -> Result<LearnerKind> {
    s.parse()
}

fn parse_format(s: &str) -> Result<CorpusFormat> {
    match s {
        "jsonl" => Ok(CorpusFormat::Jsonl),
        "trectext" => Ok(CorpusFormat::Trectext),
        other => Err(bad(format!("unknown format {other:?} (jsonl|trectext)"))),
    }
}

/// Stopword flag: a path, or the literal "none" (the default).
fn resolve_stopwords(cfg: &Config, cli: Option<String>, pipe: &PipelineConfig) -> Result<StopwordSet> {
    let raw = cfg.resolve(cli, "stopwords", |s| Ok(s.to_string()), "none".to_string())?;
    if raw == "none" {
        return Ok(StopwordSet::new());
    }
    load_stopwords(Path::new(&raw), pipe)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// shared assembly

fn load_config_flag(path: &Option<PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::empty()),
    }
}

fn scorer_spec(
    cfg: &Config,
    model: Option<String>,
    lambda: Option<String>,
    jm: Option<String>,
    mu: Option<String>,
    mode: Option<String>,
) -> Result<ScorerSpec> {
    // parse every supplied flag eagerly so malformed values always error,
    // even when the chosen model does not consume them
    let kind = cfg.resolve_required(model.map(|s| s.parse()).transpose()?, "model", parse_model)?;
    let lambda_cli = lambda.map(|s| parse_lambda(&s)).transpose()?;
    let jm_cli = jm.map(|s| parse_jm(&s)).transpose()?;
    let mu_cli = mu.map(|s| parse_mu_triple(&s)).transpose()?;
    let mode = cfg.resolve(
        mode.as_deref().map(parse_mode).transpose()?,
        "mode",
        parse_mode,
        NormalizerMode::Exact,
    )?;
    let (mu_u, mu_b, mu_w) = cfg.resolve(mu_cli, "mu", parse_mu_triple, (1.0, 1.0, 1.0))?;
    let smoothing = SmoothingParams::new(mu_u, mu_b, mu_w, mode)?;
    let spec = match kind {
        ScorerKind::Ql => ScorerSpec::ql(smoothing),
        ScorerKind::Jm => {
            let jm = cfg.resolve(jm_cli, "jm", parse_jm, JMWeights::new(0.8, 0.9))?;
            ScorerSpec::jm(jm, smoothing)
        }
        _ => {
            let lambda = cfg.resolve(
                lambda_cli,
                "lambda",
                parse_lambda,
                MixtureWeights::new(0.8, 0.1, 0.1),
            )?;
            ScorerSpec::with_lambda(kind, lambda, smoothing)
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn method_spec(
    cfg: &Config,
    model: Option<String>,
    mode: Option<String>,
    mu_grid_u: Option<String>,
    mu_grid_b: Option<String>,
    mu_grid_w: Option<String>,
    grid_step: Option<f64>,
    restarts: Option<usize>,
    tol: Option<f64>,
    candidates: Option<usize>,
) -> Result<MethodSpec> {
    let kind = cfg.resolve_required(model.map(|s| s.parse()).transpose()?, "model", parse_model)?;
    let mode = cfg.resolve(
        mode.as_deref().map(parse_mode).transpose()?,
        "mode",
        parse_mode,
        NormalizerMode::Exact,
    )?;
    let mut m = MethodSpec::new(kind, mode);
    m.mu_grid_u = cfg.resolve(
        mu_grid_u.map(|s| parse_f64_list(&s)).transpose()?,
        "mu-grid-u",
        parse_f64_list,
        m.mu_grid_u,
    )?;
    m.mu_grid_b = cfg.resolve(
        mu_grid_b.map(|s| parse_f64_list(&s)).transpose()?,
        "mu-grid-b",
        parse_f64_list,
        m.mu_grid_b,
    )?;
    m.mu_grid_w = cfg.resolve(
        mu_grid_w.map(|s| parse_f64_list(&s)).transpose()?,
        "mu-grid-w",
        parse_f64_list,
        m.mu_grid_w,
    )?;
    m.grid_step = cfg.resolve(grid_step, "grid-step", parse_f64, m.grid_step)?;
    m.restarts = cfg.resolve(restarts, "restarts", parse_usize, m.restarts)?;
    m.tol = cfg.resolve(tol, "tol", parse_f64, m.tol)?;
    m.candidate_k = cfg.resolve(candidates, "candidates", parse_usize, m.candidate_k)?;
    Ok(m)
}

// ---------------------------------------------------------------------------
// subcommands

fn cmd_build_index(cfg: &Config, a: BuildIndexArgs) -> Result<()> {
    let corpus = cfg.resolve_required(a.corpus, "corpus", parse_path)?;
    let out = cfg.resolve_required(a.out, "out", parse_path)?;
    let window = cfg.resolve(a.window, "window", parse_u32, DEFAULT_WINDOW)?;
    if window == 0 {
        return Err(bad("--window must be at least 1".into()));
    }
    let format = match cfg.resolve(a.format, "format", |s| Ok(s.to_string()), String::new())? {
        s if s.is_empty() => CorpusFormat::sniff(&corpus),
        s => parse_format(&s)?,
    };
    let pipe = PipelineConfig::default();
    let docs = load_corpus(&corpus, format, &pipe)?;
    let index = PositionalIndex::build(docs, window)?;
    index.save(&out)?;
    println!(
        "indexed {} docs, {} tokens, {} terms, window {} -> {}",
        index.doc_count(),
        index.coll_tokens(),
        index.vocab().len(),
        index.window(),
        out.display()
    );
    Ok(())
}

fn cmd_run(cfg: &Config, a: RunArgs) -> Result<()> {
    let index_path = cfg.resolve_required(a.index, "index", parse_path)?;
    let queries_path = cfg.resolve_required(a.queries, "queries", parse_path)?;
    let out = cfg.resolve_required(a.out, "out", parse_path)?;
    let spec = scorer_spec(cfg, a.model, a.lambda, a.jm, a.mu, a.mode)?;
    let candidates = cfg.resolve(a.candidates, "candidates", parse_usize, DEFAULT_CANDIDATE_K)?;
    let tag = cfg.resolve(a.tag, "tag", |s| Ok(s.to_string()), "seqdep".to_string())?;

    let pipe = PipelineConfig::default();
    let stopwords = resolve_stopwords(cfg, a.stopwords, &pipe)?;
    let index = PositionalIndex::load(&index_path)?;
    let queries = load_queries(&queries_path, &pipe)?;

    // parallel per-query scoring; collect preserves input order
    let rankings: Result<Vec<Ranking>> = queries
        .par_iter()
        .map(|q| seqdep::scorer::rank_query(&index, q, &spec, candidates, &stopwords))
        .collect();
    let rankings = rankings?;
    for r in &rankings {
        if r.empty_query {
            eprintln!("warning: query {} is empty after the text pipeline", r.query_id);
        }
    }
    write_run_file(&rankings, &tag, &out)?;
    println!(
        "scored {} queries with {} -> {}",
        rankings.len(),
        spec.kind.as_str(),
        out.display()
    );
    Ok(())
}

fn cmd_tune(cfg: &Config, a: TuneArgs) -> Result<()> {
    let index_path = cfg.resolve_required(a.index, "index", parse_path)?;
    let queries_path = cfg.resolve_required(a.queries, "queries", parse_path)?;
    let qrels_path = cfg.resolve_required(a.qrels, "qrels", parse_path)?;
    let learner = cfg.resolve(
        a.learner.map(|s| s.parse()).transpose()?,
        "learner",
        parse_learner,
        LearnerKind::Grid,
    )?;
    let method = method_spec(
        cfg,
        a.model,
        a.mode,
        a.mu_grid_u,
        a.mu_grid_b,
        a.mu_grid_w,
        a.grid_step,
        a.restarts,
        a.tol,
        a.candidates,
    )?;

    let pipe = PipelineConfig::default();
    let stopwords = resolve_stopwords(cfg, a.stopwords, &pipe)?;
    let index = PositionalIndex::load(&index_path)?;
    let queries = load_queries(&queries_path, &pipe)?;
    let qrels = load_qrels(&qrels_path)?;

    let train = TrainSet::new(&index, queries.iter(), &qrels)?;
    let params = two_phase_learn(&train, &method, learner, &stopwords)?;
    write_or_print(a.out.as_deref(), &params.to_kv())
}

fn cmd_eval(cfg: &Config, a: EvalArgs) -> Result<()> {
    let run_path = cfg.resolve_required(a.run, "run", parse_path)?;
    let qrels_path = cfg.resolve_required(a.qrels, "qrels", parse_path)?;
    let rankings = read_run_file(&run_path)?;
    let qrels = load_qrels(&qrels_path)?;

    let mut report = MetricReport::default();
    for r in &rankings {
        if qrels.relevant_count(&r.query_id) == 0 {
            eprintln!(
                "warning: query {} has no relevant documents in the qrels; skipping",
                r.query_id
            );
            continue;
        }
        report.rows.push(metric_suite(r, &qrels)?);
    }
    if report.rows.is_empty() {
        return Err(bad("no evaluable queries in the run file".into()));
    }
    write_or_print(a.out.as_deref(), &report.to_tsv())
}

fn cmd_xval(cfg: &Config, a: XvalArgs) -> Result<()> {
    let index_path = cfg.resolve_required(a.index, "index", parse_path)?;
    let queries_path = cfg.resolve_required(a.queries, "queries", parse_path)?;
    let qrels_path = cfg.resolve_required(a.qrels, "qrels", parse_path)?;
    let folds_path = cfg.resolve_required(a.folds, "folds", parse_path)?;
    let out_dir = cfg.resolve_required(a.out_dir, "out-dir", parse_path)?;
    let learner = cfg.resolve(
        a.learner.map(|s| s.parse()).transpose()?,
        "learner",
        parse_learner,
        LearnerKind::Grid,
    )?;
    let method = method_spec(
        cfg,
        a.model,
        a.mode,
        a.mu_grid_u,
        a.mu_grid_b,
        a.mu_grid_w,
        a.grid_step,
        a.restarts,
        a.tol,
        a.candidates,
    )?;
    let tag = cfg.resolve(
        a.tag,
        "tag",
        |s| Ok(s.to_string()),
        method.kind.as_str().to_string(),
    )?;

    let pipe = PipelineConfig::default();
    let stopwords = resolve_stopwords(cfg, a.stopwords, &pipe)?;
    let index = PositionalIndex::load(&index_path)?;
    let queries = load_queries(&queries_path, &pipe)?;
    let qrels = load_qrels(&qrels_path)?;
    let folds = load_folds(&folds_path)?;

    let result = cross_validate(&index, &queries, &qrels, &folds, &method, learner, &stopwords)?;

    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let mut all_rankings: Vec<Ranking> = Vec::new();
    for fold in &result.folds {
        let params_path = out_dir.join(format!("params_fold{}.txt", fold.fold));
        std::fs::write(&params_path, fold.params.to_kv()).map_err(|e| Error::io(&params_path, e))?;
        let report_path = out_dir.join(format!("report_fold{}.tsv", fold.fold));
        std::fs::write(&report_path, fold.report.to_tsv()).map_err(|e| Error::io(&report_path, e))?;
        all_rankings.extend(fold.rankings.iter().cloned());
    }
    let pooled_path = out_dir.join("pooled.tsv");
    std::fs::write(&pooled_path, result.pooled.to_tsv()).map_err(|e| Error::io(&pooled_path, e))?;
    write_run_file(&all_rankings, &tag, &out_dir.join("run.txt"))?;

    for fold in &result.folds {
        println!(
            "fold {}: {} queries, train MAP {:.4}",
            fold.fold,
            fold.report.rows.len(),
            fold.params.train_map
        );
    }
    println!("pooled mean AP {:.4} over {} queries -> {}",
        result.pooled.mean_ap(),
        result.pooled.rows.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_verify(cfg: &Config, a: VerifyArgs) -> Result<()> {
    let count_corpora = cfg.resolve(a.count_corpora, "count-corpora", parse_usize, 200)?;
    let fg_instances = cfg.resolve(a.fg_instances, "fg-instances", parse_usize, 10_000)?;
    let seed = cfg.resolve(a.seed, "seed", parse_u64, 42)?;
    let defaults = SweepConfig::default();
    let sweep = SweepConfig {
        vocab: cfg.resolve(a.vocab, "vocab", parse_usize, defaults.vocab)?,
        max_doc_len: cfg.resolve(a.max_doc_len, "max-doc-len", parse_usize, defaults.max_doc_len)?,
        max_query_len: cfg.resolve(
            a.max_query_len,
            "max-query-len",
            parse_usize,
            defaults.max_query_len,
        )?,
        lambda_points: cfg.resolve(
            a.lambda_points,
            "lambda-points",
            parse_usize,
            defaults.lambda_points,
        )?,
        window: cfg.resolve(a.window, "window", parse_u32, defaults.window)?,
        mu: defaults.mu,
        tol: cfg.resolve(a.tol, "tol", parse_f64, defaults.tol)?,
        theorem1_stride: cfg.resolve(
            a.theorem1_stride,
            "theorem1-stride",
            parse_u64,
            defaults.theorem1_stride,
        )?,
        collapse_stride: cfg.resolve(
            a.collapse_stride,
            "collapse-stride",
            parse_u64,
            defaults.collapse_stride,
        )?,
        inject_fault: a.inject_fault
            || cfg
                .get("inject-fault")
                .map(parse_bool)
                .transpose()?
                .unwrap_or(false),
    };

    if count_corpora > 0 {
        let report = random_count_check(count_corpora, seed)?;
        println!(
            "count-oracle\tok\t{} corpora\t{} docs\t{} comparisons",
            report.corpora, report.docs, report.comparisons
        );
    }
    if fg_instances > 0 {
        let dev = random_factor_graph_check(fg_instances, seed.wrapping_add(1), sweep.tol)?;
        println!("factor-graph\tok\t{fg_instances} instances\tmax_dev {dev:e}");
    }
    let report = exhaustive_equivalence(&sweep)?;
    println!("{report}");
    println!("verify\tok");
    Ok(())
}

fn cmd_dump_stats(cfg: &Config, a: DumpStatsArgs) -> Result<()> {
    let index_path = cfg.resolve_required(a.index, "index", parse_path)?;
    let index = PositionalIndex::load(&index_path)?;
    write_or_print(a.out.as_deref(), &index.dump_stats())
}

fn cmd_score_term(cfg: &Config, a: ScoreTermArgs) -> Result<()> {
    let index_path = cfg.resolve_required(a.index, "index", parse_path)?;
    let doc = cfg.resolve_required(a.doc, "doc", |s| Ok(s.to_string()))?;
    let term_raw = cfg.resolve_required(a.term, "term", |s| Ok(s.to_string()))?;
    let mu = cfg.resolve(a.mu, "mu", parse_f64, 1.0)?;
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(bad(format!("--mu must be a finite non-negative number, got {mu}")));
    }

    let pipe = PipelineConfig::default();
    let term = seqdep::pipeline::tokenize(&term_raw, &pipe)
        .into_iter()
        .next()
        .ok_or_else(|| bad(format!("term {term_raw:?} is empty after the text pipeline")))?;
    let index = PositionalIndex::load(&index_path)?;
    let stats = index.unigram_stats(&term, &doc)?;
    let log_prob = lm_unigram(&stats, mu)?;
    println!("term\tdoc\tn_doc\tdoc_len\tn_coll\tcoll_tokens\tmu\tlog_prob");
    println!(
        "{term}\t{doc}\t{}\t{}\t{}\t{}\t{mu}\t{log_prob}",
        stats.n_doc, stats.doc_len, stats.n_coll, stats.coll_tokens
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn real_main(cli: Cli) -> Result<()> {
    let cfg = load_config_flag(&cli.config)?;
    match cli.cmd {
        Cmd::BuildIndex(a) => cmd_build_index(&cfg, a),
        Cmd::Run(a) => cmd_run(&cfg, a),
        Cmd::Tune(a) => cmd_tune(&cfg, a),
        Cmd::Eval(a) => cmd_eval(&cfg, a),
        Cmd::Xval(a) => cmd_xval(&cfg, a),
        Cmd::Verify(a) => cmd_verify(&cfg, a),
        Cmd::DumpStats(a) => cmd_dump_stats(&cfg, a),
        Cmd::ScoreTerm(a) => cmd_score_term(&cfg, a),
    }
}

/// Verification problems exit 3, flag misuse exits 1, everything else that
/// goes wrong with inputs exits 2.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::VerificationFailed(_) => 3,
        Error::InvalidParam(_) => 1,
        _ => 2,
    }
}

fn main() {
    if let Ok(v) = std::env::var("SDM_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                // ignore failure: the global pool may already be set
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Err(e) = real_main(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
