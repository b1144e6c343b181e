//! Splitting, mini-batch training with Adam, and early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::evalsuite::auroc;
use crate::milnet::{backward_bag, featurize_bag, forward_bag, init_params, ModelDims, ModelView};
use crate::molkit::ConformerBag;
use crate::numkern::{adam_step, bce_loss, AdamConfig, AdamState, ParamStore};
use crate::spatialgraph::{FeatConfig, SpatialGraph};

/// Reference dataset size and its split.
pub const REFERENCE_SIZES: (usize, usize, usize, usize) = (1157, 500, 200, 457);
pub const MAX_EPOCHS: usize = 200;
pub const MAX_BATCH: usize = 16;

/// Dataset indices of each partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    /// The first `n` training indices.
    pub fn train_subset(&self, n: usize) -> Result<&[usize]> {
        if n == 0 || n > self.train.len() {
            bail!(Domain, "training subset of {n} from {} training bags", self.train.len());
        }
        Ok(&self.train[..n])
    }

    pub fn validate(&self, total: usize) -> Result<()> {
        let mut seen = vec![false; total];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= total || seen[i] {
                bail!(Integrity, "split index {i} is out of range or repeated");
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            bail!(Integrity, "split does not cover every bag");
        }
        Ok(())
    }
}

/// Partition sizes: exactly 500/200/457 for 1157 bags, proportional otherwise.
pub fn split_sizes(total: usize) -> Result<(usize, usize, usize)> {
    let (n_ref, tr, va, _) = REFERENCE_SIZES;
    let train = (total * tr + n_ref / 2) / n_ref;
    let val = (total * va + n_ref / 2) / n_ref;
    if train == 0 || val == 0 || train + val >= total {
        bail!(Domain, "{total} bags are too few to split");
    }
    Ok((train, val, total - train - val))
}

/// Seeded shuffle of `0..total` cut into contiguous train, validation, and test slices.
pub fn split_dataset(total: usize, seed: u64) -> Result<SplitSpec> {
    let (train, val, _) = split_sizes(total)?;
    let mut idx: Vec<usize> = (0..total).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(train + val);
    let val_part = idx.split_off(train);
    Ok(SplitSpec { train: idx, val: val_part, test })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub lr: f64,
    /// Learning rate reached on the last epoch by linear decay; `None` keeps it constant.
    pub lr_final: Option<f64>,
    pub batch_size: usize,
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
    pub dims: ModelDims,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: MAX_EPOCHS,
            lr: 1e-3,
            lr_final: None,
            batch_size: 8,
            patience: 20,
            seed: 0,
            dims: ModelDims::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.max_epochs > MAX_EPOCHS {
            bail!(Domain, "epochs must be in 1..={MAX_EPOCHS}, got {}", self.max_epochs);
        }
        if self.batch_size == 0 || self.batch_size > MAX_BATCH {
            bail!(Domain, "batch size must be in 1..={MAX_BATCH}, got {}", self.batch_size);
        }
        for lr in std::iter::once(self.lr).chain(self.lr_final) {
            if !(lr.is_finite() && lr > 0.0) {
                bail!(Domain, "learning rate must be positive, got {lr}");
            }
        }
        self.dims.validate()
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_final {
            Some(end) if self.max_epochs > 1 => {
                let t = epoch as f64 / (self.max_epochs - 1) as f64;
                self.lr + (end - self.lr) * t
            }
            _ => self.lr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// `None` when the validation set holds one class only.
    pub val_auroc: Option<f64>,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

pub const TRAIN_LOG_COLUMNS: &str = "epoch,train_loss,val_loss,val_auroc,best_flag";

impl TrainLog {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().rev().find(|r| r.best)
    }

    /// CSV text, preceded by `header` (comment lines).
    pub fn to_csv(&self, header: &str) -> String {
        let mut s = String::from(header);
        s.push_str(TRAIN_LOG_COLUMNS);
        s.push('\n');
        for r in &self.epochs {
            let auc = r.val_auroc.map_or_else(|| "nan".to_string(), |v| v.to_string());
            s.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.train_loss, r.val_loss, auc, u8::from(r.best)));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: ParamStore,
    pub log: TrainLog,
}

/// Featurized bags used during training, keyed by dataset index.
struct Prepared<'a> {
    graphs: Vec<Option<Vec<SpatialGraph>>>,
    bags: &'a [ConformerBag],
}

impl<'a> Prepared<'a> {
    fn new(bags: &'a [ConformerBag], needed: &[usize], feat: &FeatConfig) -> Result<Self> {
        let mut graphs: Vec<Option<Vec<SpatialGraph>>> = vec![None; bags.len()];
        let built: Vec<(usize, Vec<SpatialGraph>)> = needed
            .par_iter()
            .map(|&i| Ok((i, featurize_bag(&bags[i], feat)?)))
            .collect::<Result<_>>()?;
        for (i, g) in built {
            graphs[i] = Some(g);
        }
        Ok(Self { graphs, bags })
    }

    fn get(&self, i: usize) -> &[SpatialGraph] {
        self.graphs[i].as_deref().expect("bag featurized up front")
    }
}

fn loss_and_grad(view: &ModelView<'_>, graphs: &[SpatialGraph], label: bool, zero: &ParamStore) -> Result<(f64, ParamStore)> {
    let cache = forward_bag(view, graphs)?;
    let mut g = zero.clone();
    let loss = backward_bag(view, graphs, &cache, label, &mut g)?;
    Ok((loss, g))
}

/// Mean loss and AUROC over a set of bags.
fn evaluate(view: &ModelView<'_>, data: &Prepared<'_>, idx: &[usize]) -> Result<(f64, Option<f64>)> {
    let probs: Vec<f64> = idx
        .par_iter()
        .map(|&i| Ok(forward_bag(view, data.get(i))?.output.prob))
        .collect::<Result<_>>()?;
    let labels: Vec<bool> = idx.iter().map(|&i| data.bags[i].bag_label).collect();
    let mut total = 0.0;
    for (p, y) in probs.iter().zip(&labels) {
        total += bce_loss(*p, if *y { 1.0 } else { 0.0 })?;
    }
    let auc = auroc(&labels, &probs).ok();
    Ok((total / idx.len() as f64, auc))
}

pub fn train(
    bags: &[ConformerBag],
    train_idx: &[usize],
    val_idx: &[usize],
    config: &TrainConfig,
    feat: &FeatConfig,
) -> Result<TrainOutcome> {
    train_with_progress(bags, train_idx, val_idx, config, feat, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_progress<F: FnMut(&EpochRecord)>(
    bags: &[ConformerBag],
    train_idx: &[usize],
    val_idx: &[usize],
    config: &TrainConfig,
    feat: &FeatConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_idx.is_empty() || val_idx.is_empty() {
        bail!(Domain, "training and validation sets must be non-empty");
    }
    if let Some(&i) = train_idx.iter().chain(val_idx).find(|&&i| i >= bags.len()) {
        bail!(Domain, "bag index {i} out of range");
    }
    if feat.node_dim() != config.dims.node_dim || feat.edge_dim() != config.dims.edge_dim {
        bail!(Shape, "featurization does not match model input widths");
    }
    let needed: Vec<usize> = train_idx.iter().chain(val_idx).copied().collect();
    let data = Prepared::new(bags, &needed, feat)?;

    let mut params = init_params(&config.dims, config.seed)?;
    let zero = params.zeros_like();
    let mut adam = AdamState::new(&params, AdamConfig { lr: config.lr, ..Default::default() });
    let mut order = train_idx.to_vec();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);

    let mut log = TrainLog::default();
    let mut best: Option<(f64, ParamStore)> = None;
    let mut stale = 0;
    for epoch in 0..config.max_epochs {
        adam.set_lr(config.lr_at(epoch));
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let view = ModelView::new(&config.dims, &params)?;
            let results: Vec<(f64, ParamStore)> = batch
                .par_iter()
                .map(|&i| loss_and_grad(&view, data.get(i), bags[i].bag_label, &zero))
                .collect::<Result<_>>()?;
            let mut grad = zero.clone();
            for (loss, g) in &results {
                if !loss.is_finite() {
                    bail!(Numeric, "non-finite loss at epoch {} batch {b}", epoch + 1);
                }
                loss_sum += loss;
                grad.add_scaled(g, 1.0)?;
            }
            grad.scale(1.0 / batch.len() as f64);
            if !grad.all_finite() {
                bail!(Numeric, "non-finite gradient at epoch {} batch {b}", epoch + 1);
            }
            adam_step(&mut params, &grad, &mut adam)?;
            if !params.all_finite() {
                bail!(Numeric, "parameters diverged at epoch {} batch {b}", epoch + 1);
            }
        }
        let view = ModelView::new(&config.dims, &params)?;
        let (val_loss, val_auroc) = evaluate(&view, &data, val_idx)?;
        if !val_loss.is_finite() {
            bail!(Numeric, "non-finite validation loss at epoch {}", epoch + 1);
        }
        let improved = best.as_ref().map_or(true, |(b, _)| val_loss < *b);
        if improved {
            best = Some((val_loss, params.clone()));
            stale = 0;
        } else {
            stale += 1;
        }
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / order.len() as f64,
            val_loss,
            val_auroc,
            best: improved,
        };
        on_epoch(&record);
        log.epochs.push(record);
        if stale >= config.patience.max(1) {
            break;
        }
    }
    let params = best.map(|(_, p)| p).unwrap_or(params);
    Ok(TrainOutcome { params, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_split() {
        let s = split_dataset(1157, 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (500, 200, 457));
        s.validate(1157).unwrap();
        assert_eq!(s, split_dataset(1157, 3).unwrap());
        assert_ne!(s, split_dataset(1157, 4).unwrap());
        assert_eq!(s.train_subset(100).unwrap(), &s.train[..100]);
        assert!(s.train_subset(501).is_err());
    }

    #[test]
    fn proportional_split() {
        let s = split_dataset(100, 0).unwrap();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 100);
        assert_eq!(s.train.len(), 43);
        s.validate(100).unwrap();
        assert!(matches!(split_dataset(2, 0), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn config_bounds() {
        assert!(TrainConfig { max_epochs: 201, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 17, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        let c = TrainConfig { max_epochs: 11, lr_final: Some(1e-4), ..Default::default() };
        assert_eq!(c.lr_at(0), 1e-3);
        assert!((c.lr_at(10) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn csv_layout() {
        let log = TrainLog {
            epochs: vec![EpochRecord { epoch: 1, train_loss: 0.5, val_loss: 0.25, val_auroc: None, best: true }],
        };
        assert_eq!(log.to_csv("# x\n"), "# x\nepoch,train_loss,val_loss,val_auroc,best_flag\n1,0.5,0.25,nan,1\n");
    }
}
