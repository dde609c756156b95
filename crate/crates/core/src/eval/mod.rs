//! Ranking quality and reproducibility metrics over datasets.

mod metrics;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{
    exposure_for_order, exposure_rate, kendall_tau, ndcg_at_k, ndcg_for_order, prediction_difference, rank_order,
    rank_order_by_id,
};

use crate::data::{Dataset, QueryGroup};
use crate::distill::{score_dataset, BoostPredicate};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::nn::softmax_unchecked;
use crate::util::mean;

pub const DEFAULT_TAU_THRESHOLD: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Cutoff for the exposure metrics.
    pub exposure_k: usize,
    /// Predicate whose items count towards `boosted_exposure`.
    pub boost: Option<BoostPredicate>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            exposure_k: 10,
            boost: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingMetricsReport {
    pub queries: usize,
    /// Queries with a positive primary label; NDCG means run over these only.
    pub judged_queries: usize,
    pub ndcg_at_5: f64,
    pub ndcg_at_10: f64,
    pub ndcg_full: f64,
    pub exposure_k: usize,
    /// Per objective: share of top-k slots held by items with positive latent
    /// utility for that objective. `None` when the data has no utilities.
    pub objective_exposure: Vec<Option<f64>>,
    pub boosted_exposure: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: u64,
    pub judged: bool,
    pub ndcg_at_5: f64,
    pub ndcg_at_10: f64,
    pub ndcg_full: f64,
    pub objective_exposure: Vec<Option<f64>>,
    pub boosted_exposure: Option<f64>,
}

fn query_metrics(
    group: &QueryGroup,
    scores: &[f64],
    k_objectives: usize,
    options: &EvalOptions,
) -> Result<QueryMetrics> {
    if scores.len() != group.len() {
        return Err(Error::input(format!(
            "query {}: {} scores for {} items",
            group.query_id,
            scores.len(),
            group.len()
        )));
    }
    let order = rank_order_by_id(scores, &group.item_ids());
    let rel = group.primary_relevance();
    let judged = rel.iter().any(|&r| r);
    let objective_exposure = (0..k_objectives)
        .map(|k| {
            if group.items.iter().all(|i| i.utilities.len() > k) {
                let flags: Vec<bool> = group.items.iter().map(|i| i.utilities[k] > 0.0).collect();
                Some(exposure_for_order(&order, &flags, options.exposure_k))
            } else {
                None
            }
        })
        .collect();
    Ok(QueryMetrics {
        query_id: group.query_id,
        judged,
        ndcg_at_5: ndcg_for_order(&order, &rel, 5)?,
        ndcg_at_10: ndcg_for_order(&order, &rel, 10)?,
        ndcg_full: ndcg_for_order(&order, &rel, group.len())?,
        objective_exposure,
        boosted_exposure: options
            .boost
            .as_ref()
            .map(|p| exposure_for_order(&order, &p.flags(group), options.exposure_k)),
    })
}

/// Aggregates per-query metrics for precomputed scores.
pub fn evaluate_scores(
    dataset: &Dataset,
    scores: &[Vec<f64>],
    options: &EvalOptions,
) -> Result<(RankingMetricsReport, Vec<QueryMetrics>)> {
    if scores.len() != dataset.len() {
        return Err(Error::input(format!(
            "{} score vectors for {} groups",
            scores.len(),
            dataset.len()
        )));
    }
    if options.exposure_k == 0 {
        return Err(Error::config("exposure_k must be positive"));
    }
    let k = dataset.num_objectives();
    let rows = dataset
        .groups
        .par_iter()
        .zip(scores.par_iter())
        .map(|(g, s)| query_metrics(g, s, k, options))
        .collect::<Result<Vec<_>>>()?;
    let judged: Vec<&QueryMetrics> = rows.iter().filter(|r| r.judged).collect();
    let objective_exposure = (0..k)
        .map(|o| {
            if !rows.is_empty() && rows.iter().all(|r| r.objective_exposure[o].is_some()) {
                Some(mean(rows.iter().map(|r| r.objective_exposure[o].unwrap())))
            } else {
                None
            }
        })
        .collect();
    let report = RankingMetricsReport {
        queries: rows.len(),
        judged_queries: judged.len(),
        ndcg_at_5: mean(judged.iter().map(|r| r.ndcg_at_5)),
        ndcg_at_10: mean(judged.iter().map(|r| r.ndcg_at_10)),
        ndcg_full: mean(judged.iter().map(|r| r.ndcg_full)),
        exposure_k: options.exposure_k,
        objective_exposure,
        boosted_exposure: options
            .boost
            .as_ref()
            .map(|_| mean(rows.iter().map(|r| r.boosted_exposure.unwrap_or(0.0)))),
    };
    Ok((report, rows))
}

pub fn evaluate_model(
    model: &Model,
    dataset: &Dataset,
    options: &EvalOptions,
) -> Result<(RankingMetricsReport, Vec<QueryMetrics>)> {
    evaluate_scores(dataset, &score_dataset(model, dataset)?, options)
}

/// Adds `gamma` to the scores of matching items.
pub fn apply_serving_boost(scores: &[f64], group: &QueryGroup, predicate: &BoostPredicate, gamma: f64) -> Vec<f64> {
    scores
        .iter()
        .zip(&group.items)
        .map(|(&s, item)| if predicate.matches(item) { s + gamma } else { s })
        .collect()
}

/// Model scores with a serving-time boost `gamma` on matching items.
pub fn serve_with_boost(model: &Model, group: &QueryGroup, predicate: &BoostPredicate, gamma: f64) -> Result<Vec<f64>> {
    Ok(apply_serving_boost(
        &model.score(&group.features())?,
        group,
        predicate,
        gamma,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SxSReport {
    pub queries: usize,
    /// Fraction of queries whose normalized Kendall distance `(1 − τ)/2` exceeds the threshold.
    pub change_rate: f64,
    pub mean_tau: f64,
    /// Relative prediction difference of per-query softmax probabilities.
    pub pd: f64,
    pub tau_threshold: f64,
    /// Ranking depth compared (`None` = whole page).
    pub depth: Option<usize>,
}

/// τ between A's top-`depth` items and B's ordering of those same items.
fn page_tau(order_a: &[usize], order_b: &[usize], depth: Option<usize>) -> Result<f64> {
    let d = depth.unwrap_or(order_a.len()).min(order_a.len());
    let top = &order_a[..d];
    let mut slot = vec![usize::MAX; order_a.len()];
    for (i, &item) in top.iter().enumerate() {
        slot[item] = i;
    }
    let a: Vec<usize> = (0..d).collect();
    let b: Vec<usize> = order_b
        .iter()
        .filter(|&&item| slot[item] != usize::MAX)
        .map(|&item| slot[item])
        .collect();
    kendall_tau(&a, &b)
}

pub fn sxs_from_scores(
    dataset: &Dataset,
    scores_a: &[Vec<f64>],
    scores_b: &[Vec<f64>],
    tau_threshold: f64,
    depth: Option<usize>,
) -> Result<SxSReport> {
    if dataset.is_empty() {
        return Err(Error::input("side-by-side comparison over an empty dataset"));
    }
    if scores_a.len() != dataset.len() || scores_b.len() != dataset.len() {
        return Err(Error::input("score sets do not cover the dataset"));
    }
    if depth == Some(0) {
        return Err(Error::config("depth must be positive"));
    }
    let per_query = dataset
        .groups
        .par_iter()
        .zip(scores_a.par_iter().zip(scores_b.par_iter()))
        .map(|(g, (a, b))| {
            if a.len() != g.len() || b.len() != g.len() {
                return Err(Error::input(format!("query {}: score length mismatch", g.query_id)));
            }
            let ids = g.item_ids();
            let tau = page_tau(&rank_order_by_id(a, &ids), &rank_order_by_id(b, &ids), depth)?;
            Ok((tau, softmax_unchecked(a, 1.0), softmax_unchecked(b, 1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let changed = per_query
        .iter()
        .filter(|(tau, _, _)| (1.0 - tau) / 2.0 > tau_threshold)
        .count();
    let (pa, pb): (Vec<f64>, Vec<f64>) = per_query
        .iter()
        .flat_map(|(_, a, b)| a.iter().copied().zip(b.iter().copied()))
        .map(|(a, b)| (a.max(f64::MIN_POSITIVE), b.max(f64::MIN_POSITIVE)))
        .unzip();
    Ok(SxSReport {
        queries: dataset.len(),
        change_rate: changed as f64 / dataset.len() as f64,
        mean_tau: mean(per_query.iter().map(|(t, _, _)| *t)),
        pd: prediction_difference(&pa, &pb)?,
        tau_threshold,
        depth,
    })
}

/// Side-by-side comparison of two models over every query of `dataset`.
pub fn sxs_change_rate(
    model_a: &Model,
    model_b: &Model,
    dataset: &Dataset,
    tau_threshold: f64,
    depth: Option<usize>,
) -> Result<SxSReport> {
    sxs_from_scores(
        dataset,
        &score_dataset(model_a, dataset)?,
        &score_dataset(model_b, dataset)?,
        tau_threshold,
        depth,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, GeneratorConfig};
    use crate::model::Lineage;
    use crate::nn::{Activation, LayerParams, MlpConfig, ParameterSet};

    fn data() -> Dataset {
        generate_dataset(&GeneratorConfig {
            num_queries: 60,
            ..Default::default()
        })
        .unwrap()
    }

    fn linear(weights: Vec<f64>) -> Model {
        let m = weights.len();
        let cfg = MlpConfig::new(vec![m, 1], Activation::Relu, 0.1, 0);
        let params = ParameterSet {
            layers: vec![LayerParams {
                rows: 1,
                cols: m,
                weights,
                bias: vec![0.0],
            }],
        };
        Model::new(cfg, params, Lineage::Init, 0).unwrap()
    }

    fn probe(m: usize, sign: f64) -> Model {
        linear((0..m).map(|i| sign * (1.0 + i as f64 * 0.1)).collect())
    }

    #[test]
    fn serving_boost_arithmetic() {
        let ds = data();
        let mut g = ds.groups[0].clone();
        g.items.truncate(2);
        g.items[0].review_rating = 3.0;
        g.items[0].is_new = false;
        g.items[1].review_rating = 4.9;
        g.items[1].is_new = false;
        let p = BoostPredicate::RatingAtLeast { rho: 4.5 };
        let boosted = apply_serving_boost(&[2.0, 1.0], &g, &p, 1.5);
        assert_eq!(boosted, vec![2.0, 2.5]);
        assert_eq!(rank_order(&boosted), vec![1, 0]);
    }

    #[test]
    fn zero_gamma_keeps_scores_and_huge_gamma_dominates() {
        let ds = data();
        let model = probe(ds.m, 1.0);
        let p = BoostPredicate::RatingAtLeast { rho: 4.5 };
        let scores = score_dataset(&model, &ds).unwrap();
        for (g, s) in ds.groups.iter().zip(&scores) {
            assert_eq!(&serve_with_boost(&model, g, &p, 0.0).unwrap(), s);
            let boosted = serve_with_boost(&model, g, &p, 1e6).unwrap();
            let flags = p.flags(g);
            let nflag = flags.iter().filter(|&&f| f).count();
            let order = rank_order(&boosted);
            assert!(order[..nflag].iter().all(|&i| flags[i]));
        }
    }

    #[test]
    fn sxs_identity_reversal_and_unreachable_threshold() {
        let ds = data();
        let a = probe(ds.m, 1.0);
        let b = probe(ds.m, -1.0);
        let same = sxs_change_rate(&a, &a, &ds, DEFAULT_TAU_THRESHOLD, None).unwrap();
        assert_eq!(same.change_rate, 0.0);
        assert_eq!(same.mean_tau, 1.0);
        assert_eq!(same.pd, 0.0);
        let rev = sxs_change_rate(&a, &b, &ds, 0.99, None).unwrap();
        assert_eq!(rev.change_rate, 1.0);
        assert_eq!(rev.mean_tau, -1.0);
        assert_eq!(sxs_change_rate(&a, &b, &ds, 1.0, None).unwrap().change_rate, 0.0);
        assert!(sxs_change_rate(&a, &b, &ds.empty_like(), 0.02, None).is_err());
    }

    #[test]
    fn change_rate_non_increasing_in_threshold() {
        let ds = data();
        let a = probe(ds.m, 1.0);
        let b = linear((0..ds.m).map(|i| ((i * 7) % 5) as f64 - 2.0).collect());
        let mut prev = 1.0;
        for t in [0.0, 0.01, 0.02, 0.05, 0.1, 0.3, 0.6, 1.0] {
            let r = sxs_change_rate(&a, &b, &ds, t, None).unwrap().change_rate;
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn depth_limits_compared_items() {
        let ds = data();
        let a = probe(ds.m, 1.0);
        let rep = sxs_change_rate(&a, &a, &ds, 0.02, Some(3)).unwrap();
        assert_eq!(rep.change_rate, 0.0);
        assert_eq!(rep.depth, Some(3));
    }

    #[test]
    fn report_aggregates_judged_queries() {
        let ds = data();
        let model = probe(ds.m, 1.0);
        let opts = EvalOptions {
            exposure_k: 5,
            boost: Some(BoostPredicate::IsNew),
        };
        let (rep, rows) = evaluate_model(&model, &ds, &opts).unwrap();
        assert_eq!(rep.queries, ds.len());
        assert_eq!(
            rep.judged_queries,
            ds.groups
                .iter()
                .filter(|g| g.primary_relevance().contains(&true))
                .count()
        );
        assert_eq!(rows.len(), ds.len());
        assert!(rep
            .objective_exposure
            .iter()
            .all(|e| e.is_some_and(|v| (0.0..=1.0).contains(&v))));
        assert!(rep.boosted_exposure.is_some());
        for v in [rep.ndcg_at_5, rep.ndcg_at_10, rep.ndcg_full] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
