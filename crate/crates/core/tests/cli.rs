//! End-to-end checks of the command-line binary: exit codes, config-file
//! precedence, determinism of emitted files, and the smaller subcommands.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_seqdep")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process should exit, not signal")
}

/// Build the bundled toy index into `dir` and return its path.
fn toy_index(dir: &Path) -> PathBuf {
    let idx = dir.join("toy.idx");
    let out = run(&[
        "build-index",
        "--corpus",
        data("toy/corpus.jsonl").to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "build-index failed: {}", stderr(&out));
    idx
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = run(&[flag]);
        assert_eq!(code(&out), 0, "{flag} exited {}", code(&out));
        assert!(!stdout(&out).is_empty());
    }
}

#[test]
fn usage_problems_exit_one() {
    // unknown subcommand
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 1);
    // required flag missing everywhere
    let out = run(&["build-index"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--corpus"), "stderr: {}", stderr(&out));
    // malformed value is rejected before any file is touched
    let out = run(&[
        "run",
        "--index", "no-such.idx",
        "--queries", "no-such.tsv",
        "--out", "no-such.out",
        "--model", "mrfSDM",
        "--lambda", "0.5,0.5",
    ]);
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("lambda"));
    // malformed config file line
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "model mrfSDM\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "dump-stats"]);
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
}

#[test]
fn data_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // corpus file that does not exist
    let out = run(&[
        "build-index",
        "--corpus", dir.path().join("nope.jsonl").to_str().unwrap(),
        "--out", dir.path().join("x.idx").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    // document id unknown to the index
    let idx = toy_index(dir.path());
    let out = run(&[
        "score-term",
        "--index", idx.to_str().unwrap(),
        "--doc", "no-such-doc",
        "--term", "lava",
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn config_file_supplies_flags_and_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    let idx = toy_index(dir.path());
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "# defaults for the toy corpus\n\
             index = {}\n\
             queries = {}\n\
             model = QL\n\
             mu = 7,3,11\n\
             tag = fromconfig\n",
            idx.display(),
            data("toy/queries.tsv").display()
        ),
    )
    .unwrap();

    // every flag except --out comes from the file
    let out_a = dir.path().join("a.txt");
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text_a = std::fs::read_to_string(&out_a).unwrap();
    let first = text_a.lines().next().unwrap();
    assert_eq!(first.split_whitespace().nth(5), Some("fromconfig"));

    // a command-line value beats the file
    let out_b = dir.path().join("b.txt");
    let out = run(&[
        "run",
        "--config", cfg.to_str().unwrap(),
        "--out", out_b.to_str().unwrap(),
        "--tag", "fromcli",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text_b = std::fs::read_to_string(&out_b).unwrap();
    assert_eq!(
        text_b.lines().next().unwrap().split_whitespace().nth(5),
        Some("fromcli")
    );
    // only the tag differs
    let strip_tag = |t: &str| -> Vec<String> {
        t.lines()
            .map(|l| l.split_whitespace().take(5).collect::<Vec<_>>().join(" "))
            .collect()
    };
    assert_eq!(strip_tag(&text_a), strip_tag(&text_b));
}

#[test]
fn run_output_is_deterministic_and_evaluable() {
    let dir = tempfile::tempdir().unwrap();
    let idx = toy_index(dir.path());
    let mut runs = Vec::new();
    for name in ["r1.txt", "r2.txt"] {
        let out_path = dir.path().join(name);
        let out = run(&[
            "run",
            "--index", idx.to_str().unwrap(),
            "--queries", data("toy/queries.tsv").to_str().unwrap(),
            "--out", out_path.to_str().unwrap(),
            // the generative mixture keeps a document retrievable when any
            // component is finite, so every toy query yields a full ranking
            "--model", "genSDM",
            "--lambda", "0.8,0.1,0.1",
            "--mu", "10,5,20",
            "--stopwords", data("stopwords_en.txt").to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        runs.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(runs[0], runs[1], "same invocation, different bytes");

    // the run file evaluates cleanly against the bundled judgments
    let report = dir.path().join("report.tsv");
    let out = run(&[
        "eval",
        "--run", dir.path().join("r1.txt").to_str().unwrap(),
        "--qrels", data("toy/qrels.txt").to_str().unwrap(),
        "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("query_id\tap\tp10\trr\trprec\tbpref")
    );
    let rows: Vec<&str> = lines.collect();
    // nine queries plus the aggregate row
    assert_eq!(rows.len(), 10);
    assert!(rows.last().unwrap().starts_with("all\t"));
    for row in rows {
        for cell in row.split('\t').skip(1) {
            let v: f64 = cell.parse().expect("metric cells are numbers");
            assert!((0.0..=1.0).contains(&v), "{v} out of range in {row:?}");
        }
    }
}

#[test]
fn eval_rejects_malformed_run_file() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.run");
    std::fs::write(&bad, "q1 NOTQ0 volcano1 1 3.5 tag\n").unwrap();
    let out = run(&[
        "eval",
        "--run", bad.to_str().unwrap(),
        "--qrels", data("toy/qrels.txt").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn verify_passes_at_reduced_scale() {
    let out = run(&[
        "verify",
        "--count-corpora", "5",
        "--fg-instances", "50",
        "--vocab", "3",
        "--max-doc-len", "3",
        "--max-query-len", "2",
        "--lambda-points", "3",
        "--theorem1-stride", "17",
        "--collapse-stride", "9",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("count-oracle\tok"), "stdout: {text}");
    assert!(text.contains("factor-graph\tok"), "stdout: {text}");
    assert!(text.trim_end().ends_with("verify\tok"), "stdout: {text}");
}

#[test]
fn injected_fault_makes_verification_fail() {
    let out = run(&[
        "verify",
        "--count-corpora", "0",
        "--fg-instances", "0",
        "--vocab", "3",
        "--max-doc-len", "3",
        "--max-query-len", "2",
        "--lambda-points", "3",
        "--inject-fault",
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
    assert!(!stdout(&out).contains("verify\tok"));
}

#[test]
fn dump_stats_reports_collection_totals() {
    let dir = tempfile::tempdir().unwrap();
    let idx = toy_index(dir.path());
    let out = run(&["dump-stats", "--index", idx.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("meta\twindow\t8"), "stdout: {text}");
    assert!(text.contains("meta\tdoc_count\t12"), "stdout: {text}");
    assert!(text.contains("meta\tcoll_tokens\t121"), "stdout: {text}");
}

#[test]
fn score_term_applies_the_text_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let idx = toy_index(dir.path());
    // "Lavas" lowercases and stems to the indexed form "lava"
    let out = run(&[
        "score-term",
        "--index", idx.to_str().unwrap(),
        "--doc", "volcano1",
        "--term", "Lavas",
        "--mu", "10",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let row = text.lines().nth(1).expect("header plus one row");
    let cells: Vec<&str> = row.split('\t').collect();
    assert_eq!(cells[0], "lava");
    assert_eq!(cells[1], "volcano1");
    assert_eq!(cells[2], "1", "term count in volcano1");
    assert_eq!(cells[3], "13", "volcano1 length");
    let log_prob: f64 = cells[7].parse().unwrap();
    assert!(log_prob < 0.0);
}
