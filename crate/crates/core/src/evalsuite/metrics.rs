use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub auroc: f64,
    pub auprc: f64,
    pub n: usize,
}

fn check(labels: &[bool], scores: &[f64]) -> Result<()> {
    if labels.len() != scores.len() {
        bail!(Shape, "{} labels but {} scores", labels.len(), scores.len());
    }
    if labels.is_empty() {
        bail!(UndefinedMetric, "no samples");
    }
    if scores.iter().any(|s| s.is_nan()) {
        bail!(Domain, "scores contain NaN");
    }
    Ok(())
}

/// Fraction of samples whose score lands on the correct side of 0.5.
pub fn accuracy(labels: &[bool], scores: &[f64]) -> Result<f64> {
    check(labels, scores)?;
    let hits = labels.iter().zip(scores).filter(|(y, s)| (**s >= DECISION_THRESHOLD) == **y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Indices sorted by descending score, ties in index order.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Area under the ROC curve with tied scores given their average rank.
pub fn auroc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    check(labels, scores)?;
    let pos = labels.iter().filter(|y| **y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        bail!(UndefinedMetric, "AUROC needs both classes ({pos} positive, {neg} negative)");
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean.
        let mid = (start + 1 + end) as f64 / 2.0;
        rank_sum += mid * idx[start..end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision: sum over score thresholds of precision times the recall gained.
pub fn auprc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    check(labels, scores)?;
    let pos = labels.iter().filter(|y| **y).count();
    if pos == 0 {
        bail!(UndefinedMetric, "AUPRC needs at least one positive");
    }
    let idx = descending(scores);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let gained = idx[start..end].iter().filter(|&&i| labels[i]).count();
        tp += gained;
        fp += end - start - gained;
        if gained > 0 {
            ap += (gained as f64 / pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
        start = end;
    }
    Ok(ap)
}

pub fn classification_report(labels: &[bool], scores: &[f64]) -> Result<MetricsReport> {
    Ok(MetricsReport {
        accuracy: accuracy(labels, scores)?,
        auroc: auroc(labels, scores)?,
        auprc: auprc(labels, scores)?,
        n: labels.len(),
    })
}
