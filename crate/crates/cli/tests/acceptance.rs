//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use confmil::bipygen::{generate_dataset, Dataset, GeneratorConfig};
use confmil::evalsuite::{
    accuracy, auprc, auroc, lowest_energy_baseline, retrieval_report, rf_predict, rf_train, RFConfig, RankedBag,
};
use confmil::milnet::{
    check_model, featurize_bag, forward_bag, jittered_params, predict_bag, synthetic_bag, ModelCheckConfig,
    ModelDims, ModelView,
};
use confmil::molkit::{ecfp, is_key_instance, ConformerBag};
use confmil::spatialgraph::FeatConfig;
use confmil::trainer::{split_dataset, train, TrainConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

struct Run {
    failures: usize,
}

impl Run {
    fn report(&mut self, id: u32, name: &str, started: Instant, outcome: Outcome) {
        let secs = started.elapsed().as_secs_f64();
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            self.failures += 1;
        }
        println!("{} {id:>2} {name}: {detail} [{secs:.1} s]", if ok { "PASS" } else { "FAIL" });
    }
}

fn gradient_fidelity() -> Outcome {
    let t = Instant::now();
    let r = check_model(&ModelDims::default(), &ModelCheckConfig::default()).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let worst = r.worst.map_or(String::new(), |(n, k)| format!(" at {n}[{k}]"));
    Ok((
        r.max_rel_error < 1e-4 && secs < 120.0,
        format!("max rel error {:.3e}{worst} over {} coords (< 1e-4), {secs:.1} s (< 120 s)", r.max_rel_error, r.checked),
    ))
}

fn permutation_invariance(data: &Dataset) -> Outcome {
    let dims = ModelDims::default();
    let feat = FeatConfig::default();
    let params = jittered_params(&dims, 11).map_err(|e| e.to_string())?;
    let view = ModelView::new(&dims, &params).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    let mut exact = true;
    for bag in data.bags.iter().take(100) {
        let graphs = featurize_bag(bag, &feat).map_err(|e| e.to_string())?;
        let mut perm: Vec<usize> = (0..graphs.len()).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<_> = perm.iter().map(|&i| graphs[i].clone()).collect();
        let a = forward_bag(&view, &graphs).map_err(|e| e.to_string())?.output;
        let b = forward_bag(&view, &shuffled).map_err(|e| e.to_string())?.output;
        worst = worst.max((a.prob - b.prob).abs());
        exact &= perm.iter().enumerate().all(|(j, &i)| b.alpha[j] == a.alpha[i]);
        // mirror-image conformers share a graph, so the maximum can be tied
        let top = |v: &[f64]| {
            let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (0..v.len()).filter(|&i| v[i] == m).collect::<Vec<_>>()
        };
        let mut moved: Vec<usize> = top(&b.alpha).into_iter().map(|j| perm[j]).collect();
        moved.sort_unstable();
        exact &= moved == top(&a.alpha);
    }
    Ok((worst < 1e-9 && exact, format!("max |dy| {worst:.1e} (< 1e-9), alpha permuted exactly: {exact}")))
}

fn normalization() -> Outcome {
    let dims = ModelDims::default();
    let params = jittered_params(&dims, 21).map_err(|e| e.to_string())?;
    let view = ModelView::new(&dims, &params).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=30);
        let bag = synthetic_bag(&mut rng, k, &dims);
        let out = forward_bag(&view, &bag).map_err(|e| e.to_string())?.output;
        worst = worst.max((out.alpha.iter().sum::<f64>() - 1.0).abs());
    }
    Ok((worst <= 1e-9, format!("max |sum(alpha) - 1| {worst:.1e} over 1000 bags (<= 1e-9)")))
}

fn pairwise_auroc(labels: &[bool], scores: &[f64]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi && !yj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Precision at every distinct threshold, counted from scratch.
fn sweep_auprc(labels: &[bool], scores: &[f64]) -> f64 {
    let pos = labels.iter().filter(|y| **y).count();
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (mut ap, mut prev_tp) = (0.0, 0);
    for t in thresholds {
        let tp = labels.iter().zip(scores).filter(|(y, s)| **y && **s >= t).count();
        let predicted = scores.iter().filter(|s| **s >= t).count();
        if tp > prev_tp {
            ap += ((tp - prev_tp) as f64 / pos as f64) * (tp as f64 / predicted as f64);
        }
        prev_tp = tp;
    }
    ap
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut worst_roc, mut prc_mismatch, mut sets) = (0.0f64, 0, 0);
    while sets < 100 {
        let labels: Vec<bool> = (0..20).map(|_| rng.gen_bool(0.4)).collect();
        if labels.iter().all(|y| *y) || !labels.iter().any(|y| *y) {
            continue;
        }
        // coarse scores force ties
        let scores: Vec<f64> = (0..20).map(|_| f64::from(rng.gen_range(0..8u8)) / 8.0).collect();
        let roc = auroc(&labels, &scores).map_err(|e| e.to_string())?;
        worst_roc = worst_roc.max((roc - pairwise_auroc(&labels, &scores)).abs());
        if auprc(&labels, &scores).map_err(|e| e.to_string())? != sweep_auprc(&labels, &scores) {
            prc_mismatch += 1;
        }
        sets += 1;
    }
    Ok((
        worst_roc <= 1e-12 && prc_mismatch == 0,
        format!("auroc max deviation {worst_roc:.1e} (<= 1e-12), auprc mismatches {prc_mismatch}/100"),
    ))
}

fn dataset_integrity(data: &Dataset) -> Outcome {
    let n = data.bags.len();
    let positives = data.bags.iter().filter(|b| b.bag_label).count();
    let frac = positives as f64 / n as f64;
    let k_min = data.bags.iter().map(ConformerBag::len).min().unwrap_or(0);
    let k_max = data.bags.iter().map(ConformerBag::len).max().unwrap_or(0);
    let h_min = data.bags.iter().map(|b| b.graph.atom_count()).min().unwrap_or(0);
    let h_max = data.bags.iter().map(|b| b.graph.atom_count()).max().unwrap_or(0);
    let mut consistent = 0;
    for b in &data.bags {
        let mut any = false;
        for c in &b.conformers {
            any |= is_key_instance(c, &b.graph).map_err(|e| e.to_string())?;
        }
        consistent += usize::from(any == b.bag_label);
    }
    let ok = n == 1157
        && (0.25..=0.45).contains(&frac)
        && k_min >= 1
        && k_max <= 30
        && h_min >= 10
        && h_max <= 32
        && consistent == n;
    Ok((
        ok,
        format!(
            "n {n}, positive fraction {frac:.3} ({positives}), conformers {k_min}..{k_max}, heavy atoms {h_min}..{h_max}, labels consistent {consistent}/{n}"
        ),
    ))
}

struct Trained {
    labels: Vec<bool>,
    probs: Vec<f64>,
    ranked: Vec<RankedBag>,
    secs: f64,
}

fn train_reference(data: &Dataset) -> Result<Trained, String> {
    let t = Instant::now();
    let split = split_dataset(data.bags.len(), 0).map_err(|e| e.to_string())?;
    let train_idx = split.train_subset(500).map_err(|e| e.to_string())?;
    let config = TrainConfig::default();
    let feat = FeatConfig::default();
    let outcome = train(&data.bags, train_idx, &split.val, &config, &feat).map_err(|e| e.to_string())?;
    let (mut labels, mut probs, mut ranked) = (Vec::new(), Vec::new(), Vec::new());
    for &i in &split.test {
        let bag = &data.bags[i];
        let out = predict_bag(bag, &config.dims, &outcome.params, &feat).map_err(|e| e.to_string())?;
        labels.push(bag.bag_label);
        probs.push(out.prob);
        if bag.bag_label {
            ranked.push(RankedBag {
                id: bag.id,
                scores: out.alpha,
                instance_labels: bag.conformers.iter().map(|c| c.instance_label).collect(),
            });
        }
    }
    Ok(Trained { labels, probs, ranked, secs: t.elapsed().as_secs_f64() })
}

fn end_to_end(t: &Result<Trained, String>) -> Outcome {
    let t = t.as_ref().map_err(Clone::clone)?;
    let acc = accuracy(&t.labels, &t.probs).map_err(|e| e.to_string())?;
    let auc = auroc(&t.labels, &t.probs).map_err(|e| e.to_string())?;
    Ok((
        acc >= 0.85 && auc >= 0.90 && t.secs < 900.0,
        format!("test accuracy {acc:.3} (>= 0.85), AUROC {auc:.3} (>= 0.90), training {:.0} s (< 900 s)", t.secs),
    ))
}

fn retrieval(data: &Dataset, t: &Result<Trained, String>) -> Outcome {
    let t = t.as_ref().map_err(Clone::clone)?;
    let model = retrieval_report(&t.ranked).map_err(|e| e.to_string())?.top1;
    let split = split_dataset(data.bags.len(), 0).map_err(|e| e.to_string())?;
    let positives: Vec<&ConformerBag> =
        split.test.iter().map(|&i| &data.bags[i]).filter(|b| b.bag_label).collect();
    let lowest = lowest_energy_baseline(&positives).map_err(|e| e.to_string())?.top1;
    Ok((
        model >= 0.5 && model >= 5.0 * lowest && lowest <= 0.15,
        format!("model Top-1 {model:.3} (>= 0.50 and >= 5x baseline), lowest-energy Top-1 {lowest:.3} (<= 0.15)"),
    ))
}

fn forest_baseline(data: &Dataset) -> Outcome {
    let split = split_dataset(data.bags.len(), 0).map_err(|e| e.to_string())?;
    let train_idx = split.train_subset(500).map_err(|e| e.to_string())?;
    let fp = |b: &ConformerBag| ecfp(&b.graph, 2, 128);
    let x: Vec<_> = train_idx.iter().map(|&i| fp(&data.bags[i])).collect();
    let y: Vec<bool> = train_idx.iter().map(|&i| data.bags[i].bag_label).collect();
    let config = RFConfig { n_trees: 100, max_features: 11, bootstrap: true, seed: 0 };
    let forest = rf_train(&x, &y, &config).map_err(|e| e.to_string())?;
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for &i in &split.test {
        labels.push(data.bags[i].bag_label);
        scores.push(rf_predict(&forest, &fp(&data.bags[i])).map_err(|e| e.to_string())?);
    }
    let auc = auroc(&labels, &scores).map_err(|e| e.to_string())?;
    Ok((auc >= 0.90, format!("RF test AUROC {auc:.3} (>= 0.90)")))
}

fn overfit(data: &Dataset) -> Outcome {
    let split = split_dataset(data.bags.len(), 0).map_err(|e| e.to_string())?;
    let subset = split.train_subset(10).map_err(|e| e.to_string())?;
    let config = TrainConfig { max_epochs: 200, patience: 200, ..Default::default() };
    let outcome = train(&data.bags, subset, subset, &config, &FeatConfig::default()).map_err(|e| e.to_string())?;
    let hit = outcome.log.epochs.iter().find(|r| r.train_loss < 0.05);
    let min = outcome.log.epochs.iter().map(|r| r.train_loss).fold(f64::INFINITY, f64::min);
    Ok(match hit {
        Some(r) => (true, format!("training loss {:.4} < 0.05 at epoch {}", r.train_loss, r.epoch)),
        None => (false, format!("training loss stayed at or above 0.05 (min {min:.4}) over 200 epochs")),
    })
}

fn confmil(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_confmil"))
        .arg("--no-timestamp")
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("confmil {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn pipeline(dir: &Path) -> Result<(), String> {
    confmil(dir, &["gen", "--seed", "7", "--n", "300", "--out", "data.jsonl"])?;
    confmil(
        dir,
        &[
            "train", "--dataset", "data.jsonl", "--train-size", "100", "--epochs", "3", "--seed", "5",
            "--model-out", "model.ckpt", "--log-out", "train.csv",
        ],
    )?;
    confmil(
        dir,
        &[
            "eval", "--model", "model.ckpt", "--dataset", "data.jsonl", "--metrics-out", "metrics.txt",
            "--attention-out", "attention.csv",
        ],
    )
}

fn reproducibility() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline(a.path())?;
    pipeline(b.path())?;
    let mut differing = Vec::new();
    let files = ["data.jsonl", "model.ckpt", "train.csv", "metrics.txt", "attention.csv"];
    for f in files {
        let x = std::fs::read(a.path().join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.path().join(f)).map_err(|e| e.to_string())?;
        if x != y {
            differing.push(f);
        }
    }
    Ok(if differing.is_empty() {
        (true, format!("{} output files byte-identical across two runs", files.len()))
    } else {
        (false, format!("files differ: {}", differing.join(", ")))
    })
}

fn main() {
    let mut run = Run { failures: 0 };

    let t = Instant::now();
    run.report(1, "gradient fidelity", t, gradient_fidelity());

    let data = match generate_dataset(&GeneratorConfig { seed: 7, n_molecules: 1157, ..Default::default() }) {
        Ok(d) => d,
        Err(e) => {
            println!("FAIL  dataset generation: {e}");
            std::process::exit(1);
        }
    };

    let t = Instant::now();
    run.report(2, "permutation invariance", t, permutation_invariance(&data));
    let t = Instant::now();
    run.report(3, "attention normalization", t, normalization());
    let t = Instant::now();
    run.report(4, "metric oracles", t, metric_oracles());
    let t = Instant::now();
    run.report(5, "dataset integrity", t, dataset_integrity(&data));

    let t = Instant::now();
    let trained = train_reference(&data);
    run.report(6, "end-to-end learning", t, end_to_end(&trained));
    let t = Instant::now();
    run.report(7, "key-instance retrieval", t, retrieval(&data, &trained));
    let t = Instant::now();
    run.report(8, "fingerprint forest baseline", t, forest_baseline(&data));
    let t = Instant::now();
    run.report(9, "overfit smoke test", t, overfit(&data));
    let t = Instant::now();
    run.report(10, "reproducibility", t, reproducibility());

    if run.failures > 0 {
        println!("{} criteria failed", run.failures);
        std::process::exit(1);
    }
}
