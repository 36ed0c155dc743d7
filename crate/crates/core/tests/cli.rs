//! End-to-end tests of the `logigan` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logigan"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mine_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex.jsonl");
    let corpus = fixture("miner_corpus.jsonl");
    for threads in ["1", "4"] {
        ok(&["--threads", threads, "mine", s(&corpus), "--out", s(&out), "--seed", "0"]);
        assert_eq!(
            std::fs::read(&out).unwrap(),
            std::fs::read(fixture("miner_golden.jsonl")).unwrap()
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("ex.jsonl.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "mine");
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn random_sentence_mode_omits_indicators() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex.jsonl");
    ok(&[
        "mine",
        s(&fixture("miner_corpus.jsonl")),
        "--out",
        s(&out),
        "--mask-mode",
        "random-sentence",
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert!(!lines.is_empty());
    for l in lines {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v.get("indicator").is_none() && v.get("indicator_class").is_none());
    }
}

#[test]
fn empty_corpus_yields_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.jsonl");
    std::fs::write(&corpus, "").unwrap();
    let out = dir.path().join("ex.jsonl");
    ok(&["mine", s(&corpus), "--out", s(&out)]);
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "{\"schema\":\"logigan/examples\",\"version\":1}\n"
    );
}

#[test]
fn unreadable_input_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["mine", "does/not/exist", "--out", s(&dir.path().join("o.jsonl"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does/not/exist"));
}

#[test]
fn stats_counts_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let five: String = std::fs::read_to_string(fixture("miner_golden.jsonl"))
        .unwrap()
        .lines()
        .take(6)
        .map(|l| format!("{l}\n"))
        .collect();
    let ex = dir.path().join("five.jsonl");
    std::fs::write(&ex, five).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let shown = ok(&["stats", s(&ex), "--out", s(&a)]);
    ok(&["stats", s(&ex), "--out", s(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["total_examples"], 5);
    assert_eq!(v["per_class_counts"]["conclusion"], 3);
    assert_eq!(v["per_class_counts"]["premise"], 2);
    let hist_total: u64 = v["statement_length_histogram"]
        .as_object()
        .unwrap()
        .values()
        .map(|x| x.as_u64().unwrap())
        .sum();
    assert_eq!(hist_total, 5);
    assert!(String::from_utf8_lossy(&shown.stdout).contains("total examples: 5"));
}

#[test]
fn stats_reports_malformed_line() {
    let dir = tempfile::tempdir().unwrap();
    let ex = dir.path().join("bad.jsonl");
    let mut text: String = std::fs::read_to_string(fixture("miner_golden.jsonl"))
        .unwrap()
        .lines()
        .take(3)
        .map(|l| format!("{l}\n"))
        .collect();
    text.push_str("{not json\n");
    std::fs::write(&ex, text).unwrap();
    let out = run(&["stats", s(&ex), "--out", s(&dir.path().join("o.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":4:"));
}

#[test]
fn index_round_trips_and_rejects_bad_magic() {
    use logigan::candidates::Bm25Index;
    let dir = tempfile::tempdir().unwrap();
    let ix = dir.path().join("ix.bin");
    let golden = fixture("miner_golden.jsonl");
    ok(&["index", s(&golden), "--out", s(&ix)]);
    let bytes = std::fs::read(&ix).unwrap();
    let loaded = Bm25Index::load(&ix).unwrap();
    assert_eq!(loaded.to_bytes(), bytes);

    let statements: Vec<String> = logigan::miner::read_examples(&golden)
        .unwrap()
        .map(|e| e.unwrap().statement)
        .collect();
    let memory = Bm25Index::build(&statements, 1.2, 0.75).unwrap();
    for q in &statements {
        assert_eq!(memory.retrieve_ids(q, 10), loaded.retrieve_ids(q, 10));
    }

    let mut corrupt = bytes.clone();
    corrupt[0] = b'X';
    std::fs::write(&ix, corrupt).unwrap();
    let err = Bm25Index::load(&ix).unwrap_err();
    assert!(err.to_string().contains("magic"), "{err}");
}

const TRAIN_CONFIG: &str = r#"{
  "M": 120, "M_alpha": 60, "M_beta": 60, "m": 30,
  "N": 60, "n": 30, "Q": 2, "E": 2, "heldout": 30,
  "max_len": 8, "verifier_dim": 256, "seed": 5
}"#;

fn synth_examples(dir: &Path) -> PathBuf {
    let corpus = dir.join("synth.jsonl");
    ok(&["synth", "--out", s(&corpus), "--documents", "120", "--seed", "2"]);
    let ex = dir.join("ex.jsonl");
    ok(&["mine", s(&corpus), "--out", s(&ex), "--seed", "2"]);
    ex
}

fn only_run_dir(parent: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = std::fs::read_dir(parent)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

#[test]
fn train_is_deterministic_and_eval_reads_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let ex = synth_examples(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, TRAIN_CONFIG).unwrap();

    let mut reports = Vec::new();
    let mut run_dirs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let parent = dir.path().join(format!("runs{i}"));
        let out = ok(&[
            "--threads", threads, "train", s(&ex), "--config", s(&cfg), "--out", s(&parent),
        ]);
        let table = String::from_utf8_lossy(&out.stdout).to_string();
        assert!(table.contains("L_ver") && table.contains("warmup epoch"), "{table}");
        let run_dir = only_run_dir(&parent);
        assert!(run_dir.file_name().unwrap().to_str().unwrap().starts_with("seed5-"));
        for f in ["generator.ckpt", "verifier.ckpt", "vocab.jsonl", "report.json", "manifest.json"] {
            assert!(run_dir.join(f).exists(), "{f}");
        }
        reports.push(std::fs::read(run_dir.join("report.json")).unwrap());
        run_dirs.push(run_dir);
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(
        std::fs::read(run_dirs[0].join("generator.ckpt")).unwrap(),
        std::fs::read(run_dirs[1].join("generator.ckpt")).unwrap()
    );
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(report["iterations"].as_array().unwrap().len(), 2);
    assert_eq!(report["checkpoints"][0], "generator.ckpt");

    let metrics = dir.path().join("eval.json");
    ok(&[
        "eval",
        s(&ex),
        "--checkpoint",
        s(&run_dirs[0]),
        "--checkpoint",
        s(&run_dirs[1]),
        "--out",
        s(&metrics),
    ]);
    let rows: serde_json::Value = serde_json::from_slice(&std::fs::read(&metrics).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    for r in rows.as_array().unwrap() {
        let acc = r["metrics"]["ranking_accuracy"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&acc));
        assert!(r["metrics"]["mean_tf"].as_f64().unwrap().is_finite());
    }
}

#[test]
fn q_zero_gives_warmup_only_run() {
    let dir = tempfile::tempdir().unwrap();
    let ex = synth_examples(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, TRAIN_CONFIG.replace("\"Q\": 2", "\"Q\": 0")).unwrap();
    let parent = dir.path().join("runs");
    ok(&["train", s(&ex), "--config", s(&cfg), "--out", s(&parent)]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(only_run_dir(&parent).join("report.json")).unwrap())
            .unwrap();
    assert!(report["iterations"].as_array().unwrap().is_empty());
    assert_eq!(report["warmup"].as_array().unwrap().len(), 2);
    assert_eq!(report["after_warmup"], report["final_eval"]);
}

#[test]
fn invalid_config_is_rejected_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // m * Q = 40 > M_beta = 30
    std::fs::write(&cfg, r#"{"M": 60, "M_alpha": 30, "M_beta": 30, "m": 20, "Q": 2}"#).unwrap();
    let parent = dir.path().join("runs");
    // the examples path does not exist: validation must fail first
    let out = run(&["train", "missing.jsonl", "--config", s(&cfg), "--out", s(&parent)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m * Q"));
    assert!(!parent.exists());
}

#[test]
fn eval_rejects_mismatched_checkpoint() {
    use logigan::modelkit::{GeneratorParams, Vocabulary};
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ck");
    std::fs::create_dir(&ck).unwrap();
    Vocabulary::build(["a b c"], 1).save(&ck.join("vocab.jsonl")).unwrap();
    GeneratorParams::zeros(4)
        .to_checkpoint()
        .save(&ck.join("generator.ckpt"))
        .unwrap();
    let out = run(&[
        "eval",
        s(&fixture("miner_golden.jsonl")),
        "--checkpoint",
        s(&ck),
        "--out",
        s(&dir.path().join("e.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vocabulary"));
}
