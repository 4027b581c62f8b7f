use std::path::Path;
use std::process::{Command, Output};

fn weldkg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weldkg")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) {
    let out = weldkg(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn prepare(dir: &Path, rows: usize) {
    std::fs::write(
        dir.join("synth.conf"),
        format!("n_rows = {rows}\nn_machines = 4\nn_programs = 6\nn_carbodies = 12\nseed = 1\n"),
    )
    .unwrap();
    std::fs::write(dir.join("train.conf"), "model = transe\ndim = 16\nepochs = 20\nseed = 1\n").unwrap();
    ok(&["synth", "--config", "synth.conf", "--out", "data"], dir);
    ok(&["build", "--csv", "data/data.csv", "--schema", "data/schema.txt", "--mapping", "data/mapping.txt", "--out", "kg", "--seed", "1"], dir);
}

#[test]
fn full_pipeline_emits_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    prepare(d, 200);
    ok(&["train", "--kg", "kg", "--config", "train.conf", "--out", "run"], d);
    ok(&["eval", "--kg", "kg", "--checkpoint", "run/best.ckpt", "--question", "Q1", "--out", "run/eval_q1.json"], d);
    ok(&["eval", "--kg", "kg", "--checkpoint", "run/best.ckpt", "--question", "Q2", "--out", "run/eval_q2.json"], d);
    for f in [
        "data/data.csv",
        "data/ground_truth.tsv",
        "kg/entities.tsv",
        "kg/relations.tsv",
        "kg/triples.tsv",
        "kg/schemes.json",
        "kg/diameter_scheme.json",
        "kg/grouping.tsv",
        "kg/build_report.json",
        "kg/splits/train.csv",
        "run/best.ckpt",
        "run/train_report.json",
        "run/eval_q1.json",
        "run/eval_q1.queries.tsv",
        "run/eval_q2.json",
    ] {
        assert!(d.join(f).exists(), "missing {f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("run/eval_q1.json")).unwrap()).unwrap();
    for key in ["hits_at_1", "hits_at_k", "mrr", "nrmse", "n_queries", "time_test", "ranks"] {
        assert!(report.get(key).is_some(), "{key}");
    }
}

#[test]
fn eval_without_question_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = weldkg(&["eval", "--kg", "kg", "--checkpoint", "x", "--out", "r.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = weldkg(&["eval", "--kg", "missing", "--checkpoint", "x", "--question", "Q1", "--out", "r.json"], d);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
    prepare(d, 100);
    std::fs::remove_file(d.join("kg/grouping.tsv")).unwrap();
    ok(&["train", "--kg", "kg", "--config", "train.conf", "--out", "run", "--epochs", "5"], d);
    let out = weldkg(&["eval", "--kg", "kg", "--checkpoint", "run/best.ckpt", "--question", "Q2", "--out", "r.json"], d);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(d.join("bad.conf"), "learning_rate = 1e308\nmargin = 1e308\nmodel = distmult\ndim = 16\n").unwrap();
    let out = weldkg(&["train", "--kg", "kg", "--config", "bad.conf", "--out", "bad", "--epochs", "5"], d);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_over_seeds_reports_mean_and_std() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    prepare(d, 150);
    let mut runs = Vec::new();
    for seed in 1..=5 {
        let run = format!("run{seed}");
        let s = seed.to_string();
        ok(&["train", "--kg", "kg", "--config", "train.conf", "--out", &run, "--seed", &s, "--epochs", "5"], d);
        let out = format!("{run}/eval_q1.json");
        let ck = format!("{run}/best.ckpt");
        ok(&["eval", "--kg", "kg", "--checkpoint", &ck, "--question", "Q1", "--out", &out], d);
        runs.push(run);
    }
    let mut args = vec!["compare", "--out", "cmp.md", "--runs"];
    args.extend(runs.iter().map(String::as_str));
    ok(&args, d);
    let md = std::fs::read_to_string(d.join("cmp.md")).unwrap();
    assert!(md.contains("TransE n=5"), "{md}");
    assert!(md.contains("| Q1 | Acc(Hits@1) |"), "{md}");
    assert!(md.lines().filter(|l| l.contains(" ± ")).count() >= 5, "{md}");
    assert!(d.join("cmp.json").exists());
}
