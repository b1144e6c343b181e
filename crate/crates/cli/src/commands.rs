use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use confmil::bipygen::{generate_dataset, read_dataset, write_dataset, GeneratorConfig, LoadedDataset};
use confmil::evalsuite::{
    accuracy, auprc, auroc, lowest_energy_baseline, ranking, read_attention_csv, retrieval_report, rf_predict,
    rf_train, write_attention_csv, write_key_values, AttentionRow, RFConfig, RankedBag, RetrievalReport,
};
use confmil::milnet::{check_model, load_model, predict_bag, save_model, Checkpoint, ModelCheckConfig, ModelDims};
use confmil::molkit::{ecfp, motif_dihedral, ConformerBag};
use confmil::provenance::Provenance;
use confmil::spatialgraph::FeatConfig;
use confmil::trainer::{split_dataset, train_with_progress, SplitSpec, TrainConfig};

use crate::exit;
use crate::plot::{bag_svg, BagSummary, SUMMARY_COLUMNS};
use crate::{
    BaselineArgs, BaselineKind, Cli, Command, EvalArgs, GenArgs, GradcheckArgs, ReportArgs, SplitName, TrainArgs,
};

/// Gradient checks fail at or above this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug)]
pub enum CliError {
    Lib(confmil::Error),
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use confmil::Error as E;
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Lib(e) => match e {
                E::Numeric(_) => exit::NUMERIC,
                E::Compatibility(_) => exit::COMPATIBILITY,
                _ => exit::INPUT,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Input(m) => f.write_str(m),
        }
    }
}

impl From<confmil::Error> for CliError {
    fn from(e: confmil::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn input_err<T>(msg: String) -> Result<T> {
    Err(CliError::Input(msg))
}

/// The command line as recorded in headers: program name plus arguments,
/// without the path the binary was started from.
fn command_line() -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::iter::once("confmil".to_string()).chain(args).collect::<Vec<_>>().join(" ")
}

fn provenance(cli: &Cli) -> Provenance {
    let ts = if cli.no_timestamp {
        None
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
    };
    Provenance::new(command_line()).timestamp(ts)
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return input_err(format!("{}: no such file", path.display()));
    }
    Ok(())
}

fn check_output(path: &Path) -> Result<()> {
    if path.is_dir() {
        return input_err(format!("{}: is a directory", path.display()));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            input_err(format!("{}: parent directory does not exist", path.display()))
        }
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: cannot write: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<LoadedDataset> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(read_dataset(BufReader::new(file))?)
}

fn split_indices(split: &SplitSpec, which: SplitName) -> &[usize] {
    match which {
        SplitName::Train => &split.train,
        SplitName::Val => &split.val,
        SplitName::Test => &split.test,
    }
}

fn split_name(which: SplitName) -> &'static str {
    match which {
        SplitName::Train => "train",
        SplitName::Val => "val",
        SplitName::Test => "test",
    }
}

/// Metric value, or `nan` when the metric is undefined (e.g. one class only).
fn metric(v: confmil::Result<f64>) -> Result<String> {
    match v {
        Ok(x) => Ok(x.to_string()),
        Err(confmil::Error::UndefinedMetric(_)) => Ok("nan".to_string()),
        Err(e) => Err(e.into()),
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn classification_pairs(labels: &[bool], scores: &[f64]) -> Result<Vec<(String, String)>> {
    Ok(vec![
        kv("accuracy", metric(accuracy(labels, scores))?),
        kv("auroc", metric(auroc(labels, scores))?),
        kv("auprc", metric(auprc(labels, scores))?),
    ])
}

fn retrieval_pairs(ranked: &[RankedBag]) -> Result<Vec<(String, String)>> {
    let r = if ranked.is_empty() { None } else { Some(retrieval_report(ranked)?) };
    Ok(retrieval_fields(r.as_ref(), ranked.len()))
}

fn retrieval_fields(r: Option<&RetrievalReport>, n: usize) -> Vec<(String, String)> {
    let f = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
    vec![
        kv("n_positive", n),
        kv("top1", f(r.map(|r| r.top1))),
        kv("top5", f(r.map(|r| r.top5))),
        kv("top10", f(r.map(|r| r.top10))),
    ]
}

fn emit(pairs: &[(String, String)], out: Option<&Path>, prov: &Provenance) -> Result<()> {
    for (k, v) in pairs {
        println!("{k}={v}");
    }
    if let Some(path) = out {
        write_key_values(create(path)?, &prov.comment_block(), pairs)?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<u8> {
    let prov = provenance(cli);
    match &cli.command {
        Command::Gen(a) => gen(a, prov),
        Command::Train(a) => train(a, prov),
        Command::Eval(a) => eval(a, prov),
        Command::Baseline(a) => baseline(a, prov),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Report(a) => report(a, prov),
    }
}

fn gen(a: &GenArgs, prov: Provenance) -> Result<u8> {
    check_output(&a.out)?;
    if let Some(s) = &a.stats {
        check_output(s)?;
    }
    let config = GeneratorConfig { seed: a.seed, n_molecules: a.n as usize, ..Default::default() };
    let prov = prov.seed("seed", a.seed);
    let dataset = generate_dataset(&config)?;
    write_dataset(create(&a.out)?, &dataset, &prov)?;
    let s = &dataset.stats;
    let mut pairs = vec![
        kv("n_molecules", s.n_molecules),
        kv("positives", s.positives),
        kv("negatives", s.negatives),
        kv("positive_fraction", s.positive_fraction()),
    ];
    for (name, p) in [
        ("conformers", &s.conformers),
        ("heavy_atoms", &s.heavy_atoms),
        ("molecular_weight", &s.molecular_weight),
        ("rotatable_bonds", &s.rotatable_bonds),
    ] {
        pairs.push(kv(&format!("{name}_min"), p.min));
        pairs.push(kv(&format!("{name}_max"), p.max));
        pairs.push(kv(&format!("{name}_mean"), p.mean));
        pairs.push(kv(&format!("{name}_std"), p.std));
    }
    emit(&pairs, a.stats.as_deref(), &prov)?;
    Ok(exit::OK)
}

fn train(a: &TrainArgs, prov: Provenance) -> Result<u8> {
    check_input(&a.dataset)?;
    check_output(&a.model_out)?;
    check_output(&a.log_out)?;
    let config = TrainConfig {
        max_epochs: a.epochs,
        lr: a.lr,
        lr_final: a.lr_final,
        batch_size: a.batch,
        patience: a.patience,
        seed: a.seed,
        dims: ModelDims::default(),
    };
    config.validate()?;
    let data = load_dataset(&a.dataset)?;
    let split = split_dataset(data.bags.len(), a.split.split_seed)?;
    let train_idx = split.train_subset(a.train_size as usize)?;
    let prov = prov.seed("seed", a.seed).seed("split_seed", a.split.split_seed);
    let feat = FeatConfig::default();
    let outcome = train_with_progress(&data.bags, train_idx, &split.val, &config, &feat, |r| {
        let auc = r.val_auroc.map_or("nan".to_string(), |v| format!("{v:.4}"));
        eprintln!(
            "epoch {:3}  train_loss {:.5}  val_loss {:.5}  val_auroc {auc}{}",
            r.epoch,
            r.train_loss,
            r.val_loss,
            if r.best { "  *" } else { "" }
        );
    })?;
    let best = match outcome.log.best() {
        Some(b) => *b,
        None => return Err(confmil::Error::State("training produced no epochs".into()).into()),
    };
    let metadata = format!(
        "{}train_size={}\nepochs_run={}\nbest_epoch={}\n",
        prov.comment_block(),
        train_idx.len(),
        outcome.log.epochs.len(),
        best.epoch
    );
    save_model(&a.model_out, &Checkpoint { dims: config.dims, params: outcome.params, metadata })?;
    let mut log = create(&a.log_out)?;
    log.write_all(outcome.log.to_csv(&prov.comment_block()).as_bytes())?;
    log.flush()?;
    println!("best validation loss {} at epoch {}", best.val_loss, best.epoch);
    Ok(exit::OK)
}

/// `key=value` lines stored in checkpoint metadata.
fn metadata_value<'a>(metadata: &'a str, key: &str) -> Option<&'a str> {
    metadata.lines().filter(|l| !l.starts_with('#')).find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

fn eval(a: &EvalArgs, prov: Provenance) -> Result<u8> {
    check_input(&a.model)?;
    check_input(&a.dataset)?;
    check_output(&a.metrics_out)?;
    if let Some(p) = &a.attention_out {
        check_output(p)?;
    }
    let ckpt = load_model(&a.model)?;
    let feat = FeatConfig::default();
    if ckpt.dims.node_dim != feat.node_dim() || ckpt.dims.edge_dim != feat.edge_dim() {
        return Err(confmil::Error::Compatibility(format!(
            "checkpoint expects node/edge features of size {}/{}, featurizer produces {}/{}",
            ckpt.dims.node_dim,
            ckpt.dims.edge_dim,
            feat.node_dim(),
            feat.edge_dim()
        ))
        .into());
    }
    let data = load_dataset(&a.dataset)?;
    let split = split_dataset(data.bags.len(), a.split_seed.split_seed)?;
    let prov = prov.seed("split_seed", a.split_seed.split_seed);

    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let mut ranked = Vec::new();
    let mut rows = Vec::new();
    for &i in split_indices(&split, a.split) {
        let bag = &data.bags[i];
        let out = predict_bag(bag, &ckpt.dims, &ckpt.params, &feat)?;
        labels.push(bag.bag_label);
        probs.push(out.prob);
        for (k, (c, alpha)) in bag.conformers.iter().zip(&out.alpha).enumerate() {
            rows.push(AttentionRow {
                bag_id: bag.id,
                conformer_id: k,
                dihedral_deg: motif_dihedral(&c.coords, &bag.graph)?,
                energy_kcal: c.energy,
                alpha: *alpha,
                instance_label: c.instance_label,
                bag_label: bag.bag_label,
                predicted_prob: out.prob,
            });
        }
        if bag.bag_label {
            ranked.push(RankedBag {
                id: bag.id,
                scores: out.alpha.clone(),
                instance_labels: bag.conformers.iter().map(|c| c.instance_label).collect(),
            });
        }
    }
    let mut pairs = vec![
        kv("model", "gnn-attention"),
        kv("train_size", metadata_value(&ckpt.metadata, "train_size").unwrap_or("unknown")),
        kv("split", split_name(a.split)),
        kv("n", labels.len()),
    ];
    pairs.extend(classification_pairs(&labels, &probs)?);
    pairs.extend(retrieval_pairs(&ranked)?);
    emit(&pairs, Some(&a.metrics_out), &prov)?;
    if let Some(path) = &a.attention_out {
        write_attention_csv(create(path)?, &prov.comment_block(), &rows)?;
    }
    Ok(exit::OK)
}

fn baseline(a: &BaselineArgs, prov: Provenance) -> Result<u8> {
    check_input(&a.dataset)?;
    if let Some(p) = &a.metrics_out {
        check_output(p)?;
    }
    let data = load_dataset(&a.dataset)?;
    let split = split_dataset(data.bags.len(), a.split_seed.split_seed)?;
    let eval_bags: Vec<&ConformerBag> = split_indices(&split, a.split).iter().map(|&i| &data.bags[i]).collect();
    let prov = prov.seed("split_seed", a.split_seed.split_seed);
    let pairs = match a.kind {
        BaselineKind::Rf => {
            let train_idx = split.train_subset(a.train_size as usize)?;
            let bits = a.bits as usize;
            let fp = |b: &ConformerBag| ecfp(&b.graph, a.radius, bits);
            let x: Vec<_> = train_idx.iter().map(|&i| fp(&data.bags[i])).collect();
            let y: Vec<bool> = train_idx.iter().map(|&i| data.bags[i].bag_label).collect();
            let config = RFConfig {
                n_trees: a.trees as usize,
                max_features: ((bits as f64).sqrt() as usize).max(1),
                bootstrap: true,
                seed: a.seed,
            };
            let forest = rf_train(&x, &y, &config)?;
            let scores = eval_bags.iter().map(|b| rf_predict(&forest, &fp(b))).collect::<confmil::Result<Vec<_>>>()?;
            let labels: Vec<bool> = eval_bags.iter().map(|b| b.bag_label).collect();
            let mut pairs = vec![
                kv("model", "rf-ecfp"),
                kv("train_size", train_idx.len()),
                kv("split", split_name(a.split)),
                kv("n", labels.len()),
            ];
            pairs.extend(classification_pairs(&labels, &scores)?);
            pairs
        }
        BaselineKind::LowestEnergy => {
            let positives: Vec<&ConformerBag> = eval_bags.into_iter().filter(|b| b.bag_label).collect();
            let report = if positives.is_empty() { None } else { Some(lowest_energy_baseline(&positives)?) };
            let mut pairs = vec![kv("model", "lowest-energy"), kv("split", split_name(a.split))];
            pairs.extend(retrieval_fields(report.as_ref(), positives.len()));
            pairs
        }
    };
    let prov = if a.kind == BaselineKind::Rf { prov.seed("seed", a.seed) } else { prov };
    emit(&pairs, a.metrics_out.as_deref(), &prov)?;
    Ok(exit::OK)
}

fn gradcheck(a: &GradcheckArgs) -> Result<u8> {
    let config = ModelCheckConfig {
        seed: a.seed,
        bags: a.bags as usize,
        param_seeds: a.param_seeds as usize,
        corrupt_gradient: a.corrupt_gradient,
        ..Default::default()
    };
    let r = check_model(&ModelDims::default(), &config)?;
    let worst = r.worst.map_or(String::new(), |(name, k)| format!(" (worst at {name}[{k}])"));
    println!("max relative error {:.3e} over {} coordinates{worst}", r.max_rel_error, r.checked);
    if r.max_rel_error < GRADCHECK_TOLERANCE {
        Ok(exit::OK)
    } else {
        eprintln!("confmil: gradient check failed (tolerance {GRADCHECK_TOLERANCE:e})");
        Ok(exit::CHECK)
    }
}

fn report(a: &ReportArgs, prov: Provenance) -> Result<u8> {
    check_input(&a.attention_csv)?;
    if a.out_dir.exists() && !a.out_dir.is_dir() {
        return input_err(format!("{}: not a directory", a.out_dir.display()));
    }
    let file = File::open(&a.attention_csv)?;
    let rows = read_attention_csv(BufReader::new(file))?;
    let mut bags: BTreeMap<usize, Vec<AttentionRow>> = BTreeMap::new();
    for r in rows {
        bags.entry(r.bag_id).or_default().push(r);
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let mut summaries = Vec::with_capacity(bags.len());
    for (id, mut rows) in bags {
        rows.sort_by_key(|r| r.conformer_id);
        let alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
        let top = ranking(&alphas)[0];
        let summary = BagSummary {
            bag_id: id,
            bag_label: rows[0].bag_label,
            predicted_prob: rows[0].predicted_prob,
            n_conformers: rows.len(),
            argmax_conformer: rows[top].conformer_id,
            argmax_dihedral_deg: rows[top].dihedral_deg,
            argmax_alpha: rows[top].alpha,
            key_conformers: rows.iter().filter(|r| r.instance_label).count(),
            top1_hit: rows[top].instance_label,
        };
        let mut svg = create(&a.out_dir.join(format!("bag_{id}.svg")))?;
        svg.write_all(bag_svg(&rows, &summary, &prov).as_bytes())?;
        svg.flush()?;
        summaries.push(summary);
    }
    let mut out = create(&a.out_dir.join("summary.csv"))?;
    out.write_all(prov.comment_block().as_bytes())?;
    writeln!(out, "{}", SUMMARY_COLUMNS.join(","))?;
    for s in &summaries {
        writeln!(out, "{}", s.csv_row())?;
    }
    out.flush()?;
    let positives: Vec<&BagSummary> = summaries.iter().filter(|s| s.bag_label).collect();
    let hits = positives.iter().filter(|s| s.top1_hit).count();
    println!("bags={} positive_bags={} top1_hits={}", summaries.len(), positives.len(), hits);
    Ok(exit::OK)
}
