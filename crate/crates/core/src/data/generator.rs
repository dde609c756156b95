//! Synthetic marketplace search logs.
//!
//! Each item has a review rating, a review-volume signal and generic
//! features. Objective `k` has latent utility `u_k = scale · v_kᵀx` where
//! `v_0 = w_0` and, for secondary objectives,
//! `v_k = c · w_0 + sqrt(1 − c²) · w_k` with `c` the objective correlation.
//! Utilities are computed from the true features; new items then have their
//! review-derived features overwritten with [`MISSING_FEATURE`].
//!
//! Per query, a booking happens with probability `booking_rate`; the booked
//! item is drawn from `softmax(u_0)`. Only booked queries carry primary labels
//! (1 on the booked item, 0 on the rest). Secondary objective `k` labels the
//! booked item with probability `label_rates[k - 1]`, with the outcome drawn
//! from `Bernoulli(σ(u_k))` (reward) or `Bernoulli(1 − σ(u_k))` (cost).

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Item, ObjectiveSpec, Polarity, QueryGroup, MISSING_FEATURE};
use crate::error::{Error, Result};

const RATING_MEAN: f64 = 4.4;
const RATING_SD: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemsRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub num_queries: usize,
    pub items_per_query: ItemsRange,
    /// Feature width; at least 3 (rating, review volume, one generic feature).
    pub m: usize,
    /// Number of objectives, primary included.
    pub k: usize,
    pub seed: u64,
    /// Timestamps are spread evenly over `0..num_days` in query order.
    pub num_days: u32,
    pub booking_rate: f64,
    /// Explicit per-objective weight vectors (`k` vectors of `m`); drawn from the seed when absent.
    pub utility_weights: Option<Vec<Vec<f64>>>,
    pub utility_scale: f64,
    pub objective_correlation: f64,
    /// Per secondary objective (`k − 1` entries).
    pub label_rates: Vec<f64>,
    pub new_item_fraction: f64,
    /// Names and polarities; defaults are booking / cancellation / quality / objective_k.
    pub objectives: Option<Vec<ObjectiveSpec>>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_queries: 6000,
            items_per_query: ItemsRange { min: 8, max: 12 },
            m: 16,
            k: 3,
            seed: 7,
            num_days: 36,
            booking_rate: 0.5,
            utility_weights: None,
            utility_scale: 2.0,
            objective_correlation: 0.3,
            label_rates: vec![0.1, 0.1],
            new_item_fraction: 0.1,
            objectives: None,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.m < 3 {
            return bad(format!("m must be at least 3, got {}", self.m));
        }
        if self.items_per_query.min < 2 || self.items_per_query.max < self.items_per_query.min {
            return bad(format!(
                "items_per_query must satisfy 2 <= min <= max, got {}..={}",
                self.items_per_query.min, self.items_per_query.max
            ));
        }
        if self.num_days == 0 {
            return bad("num_days must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.booking_rate) {
            return bad("booking_rate must lie in [0, 1]".into());
        }
        if !(-1.0..=1.0).contains(&self.objective_correlation) {
            return bad("objective_correlation must lie in [-1, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.new_item_fraction) {
            return bad("new_item_fraction must lie in [0, 1]".into());
        }
        if !(self.utility_scale.is_finite() && self.utility_scale >= 0.0) {
            return bad("utility_scale must be finite and nonnegative".into());
        }
        if self.label_rates.len() != self.k - 1 {
            return bad(format!(
                "label_rates needs {} entries (one per secondary objective), got {}",
                self.k - 1,
                self.label_rates.len()
            ));
        }
        if self.label_rates.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad("label_rates must lie in (0, 1]".into());
        }
        if let Some(w) = &self.utility_weights {
            if w.len() != self.k || w.iter().any(|v| v.len() != self.m || v.iter().any(|x| !x.is_finite())) {
                return bad(format!(
                    "utility_weights must be {} finite vectors of length {}",
                    self.k, self.m
                ));
            }
        }
        if let Some(o) = &self.objectives {
            if o.len() != self.k {
                return bad(format!("objectives must list {} entries", self.k));
            }
            super::validate_objectives(o).map_err(|e| Error::config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn objective_specs(&self) -> Vec<ObjectiveSpec> {
        if let Some(o) = &self.objectives {
            return o.clone();
        }
        (0..self.k)
            .map(|i| {
                let (name, polarity) = match i {
                    0 => ("booking".to_string(), Polarity::Reward),
                    1 => ("cancellation".to_string(), Polarity::Cost),
                    2 => ("quality".to_string(), Polarity::Reward),
                    _ => (format!("objective_{i}"), Polarity::Reward),
                };
                ObjectiveSpec {
                    index: i,
                    name,
                    polarity,
                    primary: i == 0,
                }
            })
            .collect()
    }

    /// Raw per-objective weight vectors before correlation mixing.
    fn base_weights(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        if let Some(w) = &self.utility_weights {
            return w.clone();
        }
        (0..self.k)
            .map(|k| {
                let mut w: Vec<f64> = (0..self.m).map(|_| rng.sample(StandardNormal)).collect();
                if k == 0 {
                    // bookings favour well-reviewed listings with many reviews
                    w[0] = w[0].abs() + 1.0;
                    w[1] = w[1].abs() + 0.5;
                }
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                w.iter().map(|x| x / norm).collect()
            })
            .collect()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Draws a dataset; identical configs produce identical datasets.
pub fn generate_dataset(config: &GeneratorConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let base = config.base_weights(&mut rng);
    let c = config.objective_correlation;
    let s = (1.0 - c * c).max(0.0).sqrt();
    let effective: Vec<Vec<f64>> = (0..config.k)
        .map(|k| {
            if k == 0 {
                base[0].clone()
            } else {
                base[0].iter().zip(&base[k]).map(|(a, b)| c * a + s * b).collect()
            }
        })
        .collect();
    let objectives = config.objective_specs();
    let rating = Normal::new(RATING_MEAN, RATING_SD).expect("valid normal");

    let mut groups = Vec::with_capacity(config.num_queries);
    let mut next_item_id = 0u64;
    for q in 0..config.num_queries {
        let n = rng.random_range(config.items_per_query.min..=config.items_per_query.max);
        let mut items = Vec::with_capacity(n);
        for _ in 0..n {
            let r: f64 = rating.sample(&mut rng);
            let review_rating = r.clamp(1.0, 5.0);
            let mut x = Vec::with_capacity(config.m);
            x.push((review_rating - RATING_MEAN) / RATING_SD);
            x.push(rng.sample(StandardNormal));
            for _ in 2..config.m {
                x.push(rng.sample(StandardNormal));
            }
            let utilities: Vec<f64> = effective
                .iter()
                .map(|w| config.utility_scale * w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let is_new = rng.random_bool(config.new_item_fraction);
            let (features, review_rating) = if is_new {
                let mut f = x;
                f[0] = MISSING_FEATURE;
                f[1] = MISSING_FEATURE;
                (f, 0.0)
            } else {
                (x, review_rating)
            };
            items.push(Item {
                item_id: next_item_id,
                features,
                review_rating,
                is_new,
                utilities,
            });
            next_item_id += 1;
        }

        let mut labels = vec![vec![None; config.k]; n];
        if rng.random_bool(config.booking_rate) {
            let u0: Vec<f64> = items.iter().map(|i| i.utilities[0]).collect();
            let probs = crate::nn::softmax_unchecked(&u0, 1.0);
            let draw: f64 = rng.random();
            let mut acc = 0.0;
            let mut booked = n - 1;
            for (p, prob) in probs.iter().enumerate() {
                acc += prob;
                if draw < acc {
                    booked = p;
                    break;
                }
            }
            for (p, row) in labels.iter_mut().enumerate() {
                row[0] = Some(u8::from(p == booked));
            }
            for k in 1..config.k {
                if rng.random_bool(config.label_rates[k - 1]) {
                    let good = sigmoid(items[booked].utilities[k]);
                    let p_one = match objectives[k].polarity {
                        Polarity::Reward => good,
                        Polarity::Cost => 1.0 - good,
                    };
                    labels[booked][k] = Some(u8::from(rng.random_bool(p_one)));
                }
            }
        }

        groups.push(QueryGroup {
            query_id: q as u64,
            timestamp: ((q as u64 * config.num_days as u64) / config.num_queries.max(1) as u64) as u32,
            items,
            labels,
        });
    }
    Dataset::new(objectives, config.m, groups)
}
