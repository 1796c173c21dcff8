//! Fitness and classification metrics over class-1 confidences.

use serde::Serialize;

use crate::error::{Error, Result};

/// Classification threshold used by [`Metrics::compute`].
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub confidences: Vec<f64>,
    pub targets: Vec<u8>,
}

impl Predictions {
    pub fn new(confidences: Vec<f64>, targets: Vec<u8>) -> Result<Self> {
        if confidences.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} confidences for {} targets",
                confidences.len(),
                targets.len()
            )));
        }
        if targets.iter().any(|&t| t > 1) {
            return Err(Error::InvalidArgument("targets must be 0 or 1".into()));
        }
        Ok(Predictions { confidences, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, u8)> + '_ {
        self.confidences.iter().copied().zip(self.targets.iter().copied())
    }

    fn non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::InvalidArgument("no predictions".into()))
        } else {
            Ok(())
        }
    }
}

/// Product over classes of `exp(per-class RMSE)`. Minimised; 1 is perfect.
pub fn fitness(preds: &Predictions, classes: usize) -> Result<f64> {
    let mut sq = vec![0.0; classes];
    let mut n = vec![0usize; classes];
    for (o, t) in preds.pairs() {
        let c = t as usize;
        if c >= classes {
            return Err(Error::InvalidArgument(format!("target {c} outside {classes} classes")));
        }
        sq[c] += (o - t as f64).powi(2);
        n[c] += 1;
    }
    if let Some(empty) = n.iter().position(|&k| k == 0) {
        return Err(Error::EmptyClass(empty));
    }
    Ok(sq.iter().zip(&n).map(|(s, &k)| (s / k as f64).sqrt().exp()).product())
}

/// Root mean squared error over all instances.
pub fn rmse(preds: &Predictions) -> Result<f64> {
    preds.non_empty()?;
    let sq: f64 = preds.pairs().map(|(o, t)| (o - t as f64).powi(2)).sum();
    Ok((sq / preds.len() as f64).sqrt())
}

fn predicted(o: f64, threshold: f64) -> u8 {
    u8::from(o >= threshold)
}

pub fn accuracy(preds: &Predictions, threshold: f64) -> Result<f64> {
    preds.non_empty()?;
    let hits = preds.pairs().filter(|&(o, t)| predicted(o, threshold) == t).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// F1 score of class 1. Zero when there are no true positives.
pub fn f_measure(preds: &Predictions, threshold: f64) -> Result<f64> {
    preds.non_empty()?;
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for (o, t) in preds.pairs() {
        match (predicted(o, threshold), t) {
            (1, 1) => tp += 1,
            (1, _) => fp += 1,
            (_, 1) => fne += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fne) as f64)
}

/// Area under the ROC curve from the Mann-Whitney rank statistic.
pub fn auroc(preds: &Predictions) -> Result<f64> {
    let n_pos = preds.targets.iter().filter(|&&t| t == 1).count();
    let n_neg = preds.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("AUROC needs both classes".into()));
    }
    let ranks = midranks(&preds.confidences);
    let pos_rank_sum: f64 = ranks.iter().zip(&preds.targets).filter(|(_, &t)| t == 1).map(|(r, _)| r).sum();
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// 1-based ranks with ties given their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub fitness: f64,
    pub rmse: f64,
    pub accuracy: f64,
    pub auroc: f64,
    pub f_measure: f64,
}

impl Metrics {
    /// All metrics for a two-class prediction set. Fitness and AUROC are
    /// NaN when a class is missing.
    pub fn compute(preds: &Predictions) -> Result<Self> {
        Ok(Metrics {
            fitness: fitness(preds, 2).unwrap_or(f64::NAN),
            rmse: rmse(preds)?,
            accuracy: accuracy(preds, THRESHOLD)?,
            auroc: auroc(preds).unwrap_or(f64::NAN),
            f_measure: f_measure(preds, THRESHOLD)?,
        })
    }
}
