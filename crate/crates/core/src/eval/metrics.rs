//! Per-query ranking metrics.
//!
//! | Metric | Range | Notes |
//! |--------|-------|-------|
//! | [`ndcg_at_k`] | [0, 1] | binary relevance, gain `1/log2(rank+1)` |
//! | [`exposure_rate`] | [0, 1] | share of top-k slots held by flagged items |
//! | [`kendall_tau`] | [−1, 1] | `(concordant − discordant) / (n(n−1)/2)` |
//! | [`prediction_difference`] | [0, 2] | mean `|a−b| / ((a+b)/2)` |
//!
//! Rankings sort by score descending; equal scores keep ascending index
//! order (or ascending item id via [`rank_order_by_id`]).

use crate::error::{Error, Result};

/// Item indices from best to worst; ties go to the lower index.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Item indices from best to worst; ties go to the lower item id.
pub fn rank_order_by_id(scores: &[f64], item_ids: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(item_ids[a].cmp(&item_ids[b]))
            .then(a.cmp(&b))
    });
    idx
}

fn discount(rank: usize) -> f64 {
    // rank is 1-based
    1.0 / ((rank + 1) as f64).log2()
}

/// NDCG@k with binary relevance given an explicit ranking (item indices, best first).
pub fn ndcg_for_order(order: &[usize], relevant: &[bool], k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::input("k must be at least 1"));
    }
    let num_relevant = relevant.iter().filter(|&&r| r).count();
    if num_relevant == 0 {
        return Ok(0.0);
    }
    let dcg: f64 = order
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, &i)| relevant[i])
        .map(|(pos, _)| discount(pos + 1))
        .sum();
    let ideal: f64 = (1..=num_relevant.min(k)).map(discount).sum();
    Ok(dcg / ideal)
}

/// NDCG@k of `scores` against binary relevance. No relevant items gives 0.
pub fn ndcg_at_k(scores: &[f64], relevant: &[bool], k: usize) -> Result<f64> {
    if scores.len() != relevant.len() {
        return Err(Error::input("scores and labels differ in length"));
    }
    if scores.is_empty() {
        return Err(Error::input("ndcg of an empty list"));
    }
    ndcg_for_order(&rank_order(scores), relevant, k)
}

/// Share of the top `min(k, n)` positions occupied by flagged items.
pub fn exposure_for_order(order: &[usize], flags: &[bool], k: usize) -> f64 {
    let depth = k.min(order.len());
    if depth == 0 {
        return 0.0;
    }
    order[..depth].iter().filter(|&&i| flags[i]).count() as f64 / depth as f64
}

pub fn exposure_rate(scores: &[f64], flags: &[bool], k: usize) -> Result<f64> {
    if scores.len() != flags.len() {
        return Err(Error::input("scores and flags differ in length"));
    }
    Ok(exposure_for_order(&rank_order(scores), flags, k))
}

/// Kendall's tau between two rankings of the same items, each a permutation
/// listing item indices best first.
pub fn kendall_tau(ranking_a: &[usize], ranking_b: &[usize]) -> Result<f64> {
    let n = ranking_a.len();
    if n != ranking_b.len() {
        return Err(Error::input("rankings differ in length"));
    }
    let pos_a = positions(ranking_a)?;
    let pos_b = positions(ranking_b)?;
    if n < 2 {
        return Ok(1.0);
    }
    let mut balance: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = pos_a[i] as i64 - pos_a[j] as i64;
            let db = pos_b[i] as i64 - pos_b[j] as i64;
            balance += if (da > 0) == (db > 0) { 1 } else { -1 };
        }
    }
    Ok(balance as f64 / (n * (n - 1) / 2) as f64)
}

fn positions(ranking: &[usize]) -> Result<Vec<usize>> {
    let n = ranking.len();
    let mut pos = vec![usize::MAX; n];
    for (p, &item) in ranking.iter().enumerate() {
        if item >= n || pos[item] != usize::MAX {
            return Err(Error::input("ranking is not a permutation of 0..n"));
        }
        pos[item] = p;
    }
    Ok(pos)
}

/// Relative prediction difference `1/M · Σ |a−b| / ((a+b)/2)` over positive predictions.
pub fn prediction_difference(preds_a: &[f64], preds_b: &[f64]) -> Result<f64> {
    if preds_a.len() != preds_b.len() {
        return Err(Error::input("prediction vectors differ in length"));
    }
    if preds_a.is_empty() {
        return Err(Error::input("prediction difference over zero predictions"));
    }
    if preds_a.iter().chain(preds_b).any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::input("predictions must be finite and strictly positive"));
    }
    Ok(crate::util::mean(
        preds_a
            .iter()
            .zip(preds_b)
            .map(|(a, b)| (a - b).abs() / ((a + b) / 2.0)),
    ))
}
