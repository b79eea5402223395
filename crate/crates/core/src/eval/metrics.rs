//! Ranking and classification metrics.

use crate::error::{Error, Result};

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Argument("need at least one positive and one negative".into()));
    }
    Ok((pos, neg))
}

/// Indices sorted by ascending score with runs of equal scores grouped.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Area under the ROC curve via the rank-sum statistic; tied scores share
/// their average rank, so every tied positive/negative pair counts ½.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_scores(scores, labels)?;
    let mut rank_sum = 0.0;
    let mut next_rank = 1.0;
    for g in tie_groups(scores) {
        let avg = next_rank + (g.len() as f64 - 1.0) / 2.0;
        rank_sum += avg * g.iter().filter(|&&i| labels[i]).count() as f64;
        next_rank += g.len() as f64;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision: `Σ_k (R_k − R_{k−1}) P_k` over descending score
/// thresholds. Without ties this is the mean precision at each positive's
/// rank; a block of tied scores is treated as one threshold.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check_scores(scores, labels)?;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0;
    for g in tie_groups(scores).into_iter().rev() {
        let hits = g.iter().filter(|&&i| labels[i]).count();
        tp += hits;
        seen += g.len();
        if hits > 0 {
            ap += (hits as f64 / pos as f64) * (tp as f64 / seen as f64);
        }
    }
    Ok(ap)
}

pub fn accuracy(truth: &[u32], pred: &[u32]) -> f64 {
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

fn class_counts(truth: &[u32], pred: &[u32]) -> Vec<(u32, usize, usize, usize)> {
    let mut classes: Vec<u32> = truth.iter().chain(pred).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    classes
        .into_iter()
        .map(|c| {
            let mut tp = 0;
            let mut fp = 0;
            let mut fn_ = 0;
            for (&t, &p) in truth.iter().zip(pred) {
                match (t == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    _ => {}
                }
            }
            (c, tp, fp, fn_)
        })
        .collect()
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// F1 over pooled counts. For single-label prediction this equals accuracy.
pub fn micro_f1(truth: &[u32], pred: &[u32]) -> f64 {
    let counts = class_counts(truth, pred);
    let (tp, fp, fn_) = counts
        .iter()
        .fold((0, 0, 0), |acc, c| (acc.0 + c.1, acc.1 + c.2, acc.2 + c.3));
    f1(tp, fp, fn_)
}

/// Unweighted mean of per-class F1 over classes seen in `truth` or `pred`.
pub fn macro_f1(truth: &[u32], pred: &[u32]) -> f64 {
    let counts = class_counts(truth, pred);
    if counts.is_empty() {
        return 0.0;
    }
    counts.iter().map(|c| f1(c.1, c.2, c.3)).sum::<f64>() / counts.len() as f64
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
