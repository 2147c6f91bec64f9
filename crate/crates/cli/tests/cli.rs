use std::path::Path;
use std::process::{Command, Output};

fn newsrank(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newsrank"))
        .arg("--dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("run newsrank")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = newsrank(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: &str = r#"
seed = 3
[synth]
days = 6
queries_per_day = 3
background_per_day = 20
[split]
train_days = 4
valid_days = 1
test_days = 1
[train.lambdamart]
num_trees = 20
[train.forest]
num_trees = 10
[tune.rankboost]
rounds = [5, 10]
"#;

fn small_workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.toml"), SMALL).unwrap();
    dir
}

fn cfg(dir: &Path) -> String {
    dir.join("config.toml").to_string_lossy().into_owned()
}

fn prepare(dir: &Path) {
    let c = cfg(dir);
    for step in ["synth", "ingest", "pairs", "link", "featurize", "labels", "split"] {
        ok(dir, &["--config", &c, step]);
    }
}

#[test]
fn pipeline_writes_artifacts_and_manifests() {
    let tmp = small_workspace();
    let dir = tmp.path();
    prepare(dir);
    let c = cfg(dir);
    ok(dir, &["--config", &c, "--model", "rb", "--feature-set", "sel", "train"]);
    let out = ok(dir, &["--config", &c, "--model", "rb", "--feature-set", "sel", "evaluate"]);
    assert!(out.contains("NDCG@10"), "{out}");
    ok(dir, &["--config", &c, "--model", "rb", "--binary-labels", "tune"]);
    ok(dir, &["--config", &c, "--model", "rb", "--feature-set", "sel", "rank"]);

    assert!(dir.join("models/rb-sel.json").is_file());
    assert!(dir.join("models/rb-sel.log.json").is_file());
    assert!(dir.join("tune/rb-all-binary.tsv").is_file());
    assert!(dir.join("tune/rb-all-binary.model.json").is_file());
    let tsv = std::fs::read_to_string(dir.join("tune/rb-all-binary.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 3);
    let ranking = std::fs::read_to_string(dir.join("rankings/rb-sel.tsv")).unwrap();
    assert!(ranking.starts_with("query_id\trank\tcandidate_id\tscore\n"));

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("reports/rb-sel-test.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "newsrank.report/v1");
    for m in ["MAP", "P@5", "P@10", "NDCG@5", "NDCG@10", "MRR"] {
        assert!(report["aggregate"][m].is_number(), "missing {m}");
    }

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifests/train-rb-sel.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["inputs"]["split/train.jsonl"].is_string());
    assert_eq!(manifest["outputs"]["models/rb-sel.json"]["schema"], "newsrank.model/v1");
}

#[test]
fn rerunning_a_step_reproduces_its_outputs() {
    let tmp = small_workspace();
    let dir = tmp.path();
    prepare(dir);
    let c = cfg(dir);
    ok(dir, &["--config", &c, "--model", "rf", "train"]);
    let first = std::fs::read(dir.join("models/rf-all.json")).unwrap();
    let manifest = std::fs::read(dir.join("manifests/train-rf-all.json")).unwrap();
    ok(dir, &["--config", &c, "--model", "rf", "train"]);
    assert_eq!(std::fs::read(dir.join("models/rf-all.json")).unwrap(), first);
    assert_eq!(std::fs::read(dir.join("manifests/train-rf-all.json")).unwrap(), manifest);
    ok(dir, &["--config", &c, "--model", "rf", "--seed", "4", "train"]);
    assert_ne!(std::fs::read(dir.join("models/rf-all.json")).unwrap(), first);
}

#[test]
fn failures_have_distinct_exit_codes() {
    let tmp = small_workspace();
    let dir = tmp.path();
    let c = cfg(dir);

    let missing = newsrank(dir, &["--config", &c, "pairs"]);
    assert_eq!(missing.status.code(), Some(3));

    std::fs::write(dir.join("bad.toml"), "sede = 1\n").unwrap();
    let bad = dir.join("bad.toml").to_string_lossy().into_owned();
    assert_eq!(newsrank(dir, &["--config", &bad, "pairs"]).status.code(), Some(5));
    assert_eq!(newsrank(dir, &["--metric-k", "0", "pairs"]).status.code(), Some(5));

    prepare(dir);
    ok(dir, &["--config", &c, "--model", "rb", "train"]);
    let model = dir.join("models/rb-all.json");
    let text = std::fs::read_to_string(&model).unwrap().replace("newsrank.model/v1", "newsrank.model/v0");
    std::fs::write(&model, text).unwrap();
    let out = newsrank(dir, &["--config", &c, "--model", "rb", "evaluate"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    // Entity features are unavailable once linking is switched off.
    ok(dir, &["--config", &c, "--entity-mode", "off", "featurize"]);
    ok(dir, &["--config", &c, "split"]);
    let out = newsrank(dir, &["--config", &c, "--feature-set", "all", "train"]);
    assert_eq!(out.status.code(), Some(5));
    ok(dir, &["--config", &c, "--feature-set", "all-minus", "--model", "rb", "train"]);
}

#[test]
fn report_compares_two_runs() {
    let tmp = small_workspace();
    let dir = tmp.path();
    prepare(dir);
    let c = cfg(dir);
    for set in ["all", "b"] {
        ok(dir, &["--config", &c, "--model", "rb", "--feature-set", set, "train"]);
        ok(dir, &["--config", &c, "--model", "rb", "--feature-set", set, "evaluate"]);
    }
    let out = ok(
        dir,
        &["--config", &c, "report", "--compare", "reports/rb-all-test.json", "reports/rb-b-test.json"],
    );
    assert!(out.contains("paired t-test on NDCG@10"), "{out}");
    assert!(dir.join("reports/table.txt").is_file());
}
