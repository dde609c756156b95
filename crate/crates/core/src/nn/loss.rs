//! Listwise softmax cross-entropy losses.
//!
//! For one query with item scores `z`, the model's distribution over items is
//! `p = softmax(z / T)`. Training targets are distributions over the same
//! items: the normalized primary labels (hard) and fused teacher scores
//! (soft). The distillation objective blends the two:
//!
//! ```text
//! loss = α · CE(softmax(z), hard) + (1 − α) · CE(softmax(z / T), soft)
//! ∂loss/∂z = α · (softmax(z) − hard) + (1 − α) · (softmax(z / T) − soft) / T
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

const SUM_TOLERANCE: f64 = 1e-9;

/// Nonnegative weights over one query's items, summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    /// Accepts an already-normalized vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::input("label distribution over zero items"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::input(
                "label distribution entries must be finite and nonnegative",
            ));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::input(format!("label distribution sums to {s}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights by their sum. Fails if the sum is zero.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::input("label weights must be finite and nonnegative"));
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return Err(Error::input("label weights sum to zero"));
        }
        Ok(Self(weights.iter().map(|w| w / s).collect()))
    }

    /// Uniform over `n` items.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(&vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Convex combination `Σ w_k · d_k`. Weights must sum to 1.
    pub fn mixture(parts: &[&LabelDistribution], weights: &[f64]) -> Result<Self> {
        if parts.is_empty() || parts.len() != weights.len() {
            return Err(Error::input("mixture needs one weight per distribution"));
        }
        let n = parts[0].len();
        if parts.iter().any(|p| p.len() != n) {
            return Err(Error::input("mixture components have different lengths"));
        }
        let mut out = vec![0.0; n];
        for (p, &w) in parts.iter().zip(weights) {
            for (o, v) in out.iter_mut().zip(p.as_slice()) {
                *o += w * v;
            }
        }
        Self::new(out)
    }
}

fn check_finite(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::input("cannot rank an empty item list"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::input("scores must be finite"));
    }
    Ok(())
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::config(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    Ok(())
}

/// `exp(z_p / T) / Σ_j exp(z_j / T)` with max-subtraction.
pub fn listwise_softmax(scores: &[f64], temperature: f64) -> Result<LabelDistribution> {
    check_finite(scores)?;
    check_temperature(temperature)?;
    Ok(LabelDistribution(softmax_unchecked(scores, temperature)))
}

pub(crate) fn softmax_unchecked(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|s| ((s - max) / temperature).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

/// `−Σ_p target_p · log(max(pred_p, PROB_FLOOR))`.
pub fn cross_entropy(pred: &LabelDistribution, target: &LabelDistribution) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::input(format!(
            "prediction has {} items, target has {}",
            pred.len(),
            target.len()
        )));
    }
    Ok(ce_unchecked(pred.as_slice(), target.as_slice()))
}

fn ce_unchecked(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter()
        .zip(target)
        .filter(|(_, &t)| t != 0.0)
        .map(|(&p, &t)| -t * p.max(PROB_FLOOR).ln())
        .sum()
}

/// `Σ_k weights_k · CE(pred, targets_k)`.
pub fn weighted_ce_sum(pred: &LabelDistribution, targets: &[LabelDistribution], weights: &[f64]) -> Result<f64> {
    if targets.len() != weights.len() {
        return Err(Error::input("one weight per target required"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::input("weights must be finite and nonnegative"));
    }
    let mut total = 0.0;
    for (t, &w) in targets.iter().zip(weights) {
        total += w * cross_entropy(pred, t)?;
    }
    Ok(total)
}

/// One weighted softmax-CE term of a listwise objective.
#[derive(Clone, Debug)]
pub struct ListwiseTerm<'a> {
    pub weight: f64,
    pub target: &'a LabelDistribution,
    pub temperature: f64,
}

/// Sum of weighted listwise CE terms over one item list, and its exact
/// gradient with respect to the raw scores.
pub fn listwise_terms_loss(scores: &[f64], terms: &[ListwiseTerm<'_>]) -> Result<(f64, Vec<f64>)> {
    check_finite(scores)?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; scores.len()];
    for term in terms {
        if term.target.len() != scores.len() {
            return Err(Error::input(format!(
                "target has {} items, list has {}",
                term.target.len(),
                scores.len()
            )));
        }
        check_temperature(term.temperature)?;
        let p = softmax_unchecked(scores, term.temperature);
        let t = term.target.as_slice();
        loss += term.weight * ce_unchecked(&p, t);
        let scale = term.weight / term.temperature;
        for ((g, pi), ti) in grad.iter_mut().zip(&p).zip(t) {
            *g += scale * (pi - ti);
        }
    }
    Ok((loss, grad))
}

/// The hard/soft blended distillation loss for one query.
///
/// Zero-weight terms are skipped entirely, so `alpha = 1` is exactly the hard
/// listwise CE and `alpha = 0` exactly the soft one.
pub fn distill_loss(
    scores: &[f64],
    hard: &LabelDistribution,
    soft: &LabelDistribution,
    alpha: f64,
    temperature: f64,
) -> Result<(f64, Vec<f64>)> {
    check_alpha(alpha)?;
    let mut terms = Vec::with_capacity(2);
    if alpha > 0.0 {
        terms.push(ListwiseTerm {
            weight: alpha,
            target: hard,
            temperature: 1.0,
        });
    }
    if alpha < 1.0 {
        terms.push(ListwiseTerm {
            weight: 1.0 - alpha,
            target: soft,
            temperature,
        });
    }
    listwise_terms_loss(scores, &terms)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}
