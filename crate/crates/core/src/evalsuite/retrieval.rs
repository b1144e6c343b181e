use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::molkit::ConformerBag;

/// Per-conformer scores of one bag plus its hidden instance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedBag {
    pub id: usize,
    /// Higher ranks first.
    pub scores: Vec<f64>,
    pub instance_labels: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub top1: f64,
    pub top5: f64,
    pub top10: f64,
    /// Positive bags evaluated.
    pub n: usize,
}

/// Conformer indices by descending score; equal scores keep index order.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Fraction of bags with a key instance among their `k` best-ranked conformers.
pub fn topk_retrieval(bags: &[RankedBag], k: usize) -> Result<f64> {
    if bags.is_empty() {
        bail!(UndefinedMetric, "no positive bags to retrieve from");
    }
    if k == 0 {
        bail!(Domain, "k must be positive");
    }
    let mut hits = 0;
    for bag in bags {
        if bag.scores.len() != bag.instance_labels.len() || bag.scores.is_empty() {
            bail!(Shape, "bag {}: {} scores for {} conformers", bag.id, bag.scores.len(), bag.instance_labels.len());
        }
        if !bag.instance_labels.iter().any(|l| *l) {
            bail!(Integrity, "bag {} is positive but has no key instance", bag.id);
        }
        if ranking(&bag.scores).iter().take(k).any(|&i| bag.instance_labels[i]) {
            hits += 1;
        }
    }
    Ok(hits as f64 / bags.len() as f64)
}

pub fn retrieval_report(bags: &[RankedBag]) -> Result<RetrievalReport> {
    Ok(RetrievalReport {
        top1: topk_retrieval(bags, 1)?,
        top5: topk_retrieval(bags, 5)?,
        top10: topk_retrieval(bags, 10)?,
        n: bags.len(),
    })
}

/// Ranks each positive bag's conformers by ascending energy.
pub fn energy_ranked(bags: &[&ConformerBag]) -> Vec<RankedBag> {
    bags.iter()
        .filter(|b| b.bag_label)
        .map(|b| RankedBag {
            id: b.id,
            scores: b.conformers.iter().map(|c| -c.energy).collect(),
            instance_labels: b.conformers.iter().map(|c| c.instance_label).collect(),
        })
        .collect()
}

/// Retrieval when the pose of lowest surrogate energy is taken as the key instance.
pub fn lowest_energy_baseline(bags: &[&ConformerBag]) -> Result<RetrievalReport> {
    retrieval_report(&energy_ranked(bags))
}
