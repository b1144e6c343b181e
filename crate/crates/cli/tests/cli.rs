use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn confmil(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confmil"))
        .arg("--no-timestamp")
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn small_run(dir: &Path) {
    assert_eq!(code(&confmil(dir, &["gen", "--n", "80", "--out", "d.jsonl", "--stats", "stats.txt"])), 0);
    let out = confmil(
        dir,
        &["train", "--dataset", "d.jsonl", "--train-size", "30", "--epochs", "1", "--model-out", "m.ckpt", "--log-out", "log.csv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_train_eval_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_run(d);

    let data = fs::read_to_string(d.join("d.jsonl")).unwrap();
    assert_eq!(data.lines().count(), 81);
    let stats = fs::read_to_string(d.join("stats.txt")).unwrap();
    assert!(stats.starts_with('#'));
    assert!(stats.contains("n_molecules=80"));

    let log = fs::read_to_string(d.join("log.csv")).unwrap();
    assert!(log.contains("# command: confmil --no-timestamp train"));
    assert_eq!(data_rows(&log).len(), 1);

    let out = confmil(
        d,
        &["eval", "--model", "m.ckpt", "--dataset", "d.jsonl", "--metrics-out", "metrics.txt", "--attention-out", "att.csv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(d.join("metrics.txt")).unwrap();
    for key in ["model", "train_size", "split", "n", "accuracy", "auroc", "auprc", "n_positive", "top1", "top5", "top10"] {
        assert!(metrics.lines().any(|l| l.starts_with(&format!("{key}="))), "missing {key}");
    }
    assert!(metrics.contains("train_size=30"));

    let out = confmil(d, &["report", "--attention-csv", "att.csv", "--out-dir", "plots"]);
    assert_eq!(code(&out), 0);
    let summary = fs::read_to_string(d.join("plots/summary.csv")).unwrap();
    let rows = data_rows(&summary);
    assert!(!rows.is_empty());
    for row in rows {
        let id = row.split(',').next().unwrap();
        let svg = fs::read_to_string(d.join(format!("plots/bag_{id}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}

#[test]
fn attention_rows_sum_to_one_per_bag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_run(d);
    let out = confmil(
        d,
        &["eval", "--model", "m.ckpt", "--dataset", "d.jsonl", "--split", "train", "--metrics-out", "x.txt", "--attention-out", "a.csv"],
    );
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(d.join("a.csv")).unwrap();
    let header: Vec<&str> = text.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
    let bag_col = header.iter().position(|c| *c == "bag_id").unwrap();
    let alpha_col = header.iter().position(|c| *c == "alpha").unwrap();
    let mut sums = std::collections::BTreeMap::<String, f64>::new();
    for row in data_rows(&text) {
        let f: Vec<&str> = row.split(',').collect();
        *sums.entry(f[bag_col].to_string()).or_default() += f[alpha_col].parse::<f64>().unwrap();
    }
    // whole training partition: round(80 * 500 / 1157)
    assert_eq!(sums.len(), 35);
    assert!(sums.values().all(|s| (s - 1.0).abs() <= 1e-9));
}

#[test]
fn baselines_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&confmil(d, &["gen", "--n", "80", "--out", "d.jsonl"])), 0);
    let out = confmil(d, &["baseline", "rf", "--dataset", "d.jsonl", "--train-size", "30", "--trees", "1", "--metrics-out", "rf.txt"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(d.join("rf.txt")).unwrap().contains("auroc="));
    let out = confmil(d, &["baseline", "lowest-energy", "--dataset", "d.jsonl", "--metrics-out", "le.txt"]);
    assert_eq!(code(&out), 0);
    let le = fs::read_to_string(d.join("le.txt")).unwrap();
    assert!(le.contains("top1=") && !le.contains("auroc="));
}

#[test]
fn usage_and_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&confmil(d, &["gen", "--n", "0", "--out", "x"])), 2);
    assert_eq!(code(&confmil(d, &["frobnicate"])), 2);
    let out = confmil(d, &["train", "--dataset", "missing.jsonl", "--model-out", "m", "--log-out", "l"]);
    assert_eq!(code(&out), 2);
    assert!(!d.join("m").exists());
    fs::write(d.join("bad.csv"), "not,a,header\n1,2,3\n").unwrap();
    assert_eq!(code(&confmil(d, &["report", "--attention-csv", "bad.csv", "--out-dir", "o"])), 2);
}

#[test]
fn empty_attention_csv_gives_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.csv"), "").unwrap();
    assert_eq!(code(&confmil(d, &["report", "--attention-csv", "empty.csv", "--out-dir", "o"])), 0);
    let summary = fs::read_to_string(d.join("o/summary.csv")).unwrap();
    assert!(data_rows(&summary).is_empty());
}

#[test]
fn diverging_training_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&confmil(d, &["gen", "--n", "60", "--out", "d.jsonl"])), 0);
    let out = confmil(
        d,
        &["train", "--dataset", "d.jsonl", "--train-size", "20", "--epochs", "3", "--lr", "1e300", "--model-out", "m", "--log-out", "l"],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn checkpoint_version_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_run(d);
    let mut bytes = fs::read(d.join("m.ckpt")).unwrap();
    bytes[8] = bytes[8].wrapping_add(1);
    fs::write(d.join("m.ckpt"), bytes).unwrap();
    let out = confmil(d, &["eval", "--model", "m.ckpt", "--dataset", "d.jsonl", "--metrics-out", "x.txt"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn gradcheck_minimal_and_corrupted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&confmil(d, &["gradcheck", "--bags", "1", "--param-seeds", "1"])), 0);
    let out = confmil(d, &["gradcheck", "--bags", "1", "--param-seeds", "1", "--corrupt-gradient"]);
    assert_eq!(code(&out), 5);
}
