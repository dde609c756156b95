//! Teachers, soft-label fusion, boosts, students and baselines.
//!
//! The training flow:
//!
//! 1. [`train_teacher`] fits one ranker per objective on the groups that
//!    carry a usable label for it.
//! 2. [`fuse_soft_labels`] scores every training group with each frozen
//!    teacher and sums the raw scores with the ensemble weights.
//! 3. [`inject_boost`] optionally adds a fixed amount to the soft score of
//!    items matching a rule (high rating, new listing).
//! 4. [`train_student`] minimizes `α·CE(hard) + (1−α)·CE(soft, T)`; groups
//!    without a booking contribute only the soft term.
//! 5. [`self_distill_step`] replaces the teachers by the previous student.

mod soft_labels;
mod trainer;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use soft_labels::{SoftLabelProvenance, SoftLabelSet, SoftLabels, SOFT_LABELS_FORMAT};
pub use trainer::TrainingLog;

use trainer::{fit, Example, Term};

use crate::data::{Dataset, Item, QueryGroup};
use crate::error::{Error, Result};
use crate::model::{BaselineKind, Lineage, Model};
use crate::nn::{check_alpha, listwise_softmax, softmax_unchecked, LabelDistribution, MlpConfig, ParameterSet};

/// Optimizer settings shared by every trainer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Epoch `e` uses `learning_rate / (1 + lr_decay · e)`.
    pub lr_decay: f64,
    /// Query groups per minibatch.
    pub batch_size: usize,
    /// Shuffling seed. Initialization uses `mlp.seed`.
    pub seed: u64,
    pub mlp: MlpConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.1,
            lr_decay: 0.05,
            batch_size: 16,
            seed: 0,
            mlp: MlpConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.mlp.validate()?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(self.lr_decay.is_finite() && self.lr_decay >= 0.0) {
            return Err(Error::config("lr_decay must be nonnegative"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        Ok(())
    }

    /// Same settings with both the shuffle seed and the init seed set to `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c.mlp.seed = seed;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    /// Weight of the hard-label term.
    pub alpha: f64,
    /// Applied to the student's softmax in the soft term.
    pub temperature: f64,
    /// Applied when turning soft scores into a target distribution.
    pub teacher_temperature: f64,
    pub train: TrainConfig,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            temperature: 1.0,
            teacher_temperature: 1.0,
            train: TrainConfig::default(),
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        for (name, t) in [
            ("temperature", self.temperature),
            ("teacher_temperature", self.teacher_temperature),
        ] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {t}")));
            }
        }
        self.train.validate()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            train: self.train.with_seed(seed),
            ..self.clone()
        }
    }
}

/// One frozen model per objective plus fusion weights.
#[derive(Clone, Debug)]
pub struct TeacherEnsemble {
    pub models: Vec<Model>,
    pub weights: Vec<f64>,
}

impl TeacherEnsemble {
    /// Equal weights `1/K`.
    pub fn uniform(models: Vec<Model>) -> Result<Self> {
        let k = models.len();
        Self::new(models, vec![1.0 / k as f64; k])
    }

    pub fn new(models: Vec<Model>, weights: Vec<f64>) -> Result<Self> {
        if models.is_empty() || models.len() != weights.len() {
            return Err(Error::config("teacher ensemble needs one weight per model"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config("fusion weights must be nonnegative with a positive sum"));
        }
        let m = models[0].input_dim();
        if models.iter().any(|t| t.input_dim() != m) {
            return Err(Error::config("teachers disagree on feature width"));
        }
        Ok(Self { models, weights })
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        let s: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / s).collect()
    }

    fn fingerprints(&self) -> Vec<String> {
        self.models.iter().map(Model::fingerprint).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoostPredicate {
    /// Established items whose review rating is at least `rho`.
    RatingAtLeast {
        rho: f64,
    },
    IsNew,
}

impl BoostPredicate {
    pub fn validate(&self) -> Result<()> {
        match self {
            BoostPredicate::RatingAtLeast { rho } if !(0.0..=5.0).contains(rho) => {
                Err(Error::config(format!("rating threshold {rho} outside [0, 5]")))
            }
            _ => Ok(()),
        }
    }

    pub fn matches(&self, item: &Item) -> bool {
        match self {
            BoostPredicate::RatingAtLeast { rho } => !item.is_new && item.review_rating >= *rho,
            BoostPredicate::IsNew => item.is_new,
        }
    }

    pub fn flags(&self, group: &QueryGroup) -> Vec<bool> {
        group.items.iter().map(|i| self.matches(i)).collect()
    }
}

/// Adds `beta` to the soft score of matching items.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostRule {
    pub predicate: BoostPredicate,
    pub beta: f64,
}

fn dims_match(model: &Model, dataset: &Dataset) -> Result<()> {
    if model.input_dim() != dataset.m {
        return Err(Error::input(format!(
            "model expects {} features, dataset has {}",
            model.input_dim(),
            dataset.m
        )));
    }
    Ok(())
}

/// Scores every group; order follows the dataset.
pub fn score_dataset(model: &Model, dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
    dims_match(model, dataset)?;
    dataset.groups.par_iter().map(|g| model.score(&g.features())).collect()
}

fn finish(config: &TrainConfig, params: ParameterSet, lineage: Lineage) -> Result<Model> {
    Model::new(config.mlp.clone(), params, lineage, config.seed)
}

fn objective_examples(dataset: &Dataset, objective: usize, weight: f64) -> Vec<Example> {
    (0..dataset.len())
        .filter_map(|g| {
            dataset.objective_target(g, objective).map(|target| Example {
                group: g,
                terms: vec![Term {
                    tag: objective,
                    weight,
                    target,
                    temperature: 1.0,
                }],
            })
        })
        .collect()
}

/// Listwise CE on objective `objective` over the groups where it has a positive label.
pub fn train_teacher(dataset: &Dataset, objective: usize, config: &TrainConfig) -> Result<Model> {
    Ok(train_teacher_with_log(dataset, objective, config)?.0)
}

pub fn train_teacher_with_log(
    dataset: &Dataset,
    objective: usize,
    config: &TrainConfig,
) -> Result<(Model, TrainingLog)> {
    if objective >= dataset.num_objectives() {
        return Err(Error::input(format!("objective {objective} out of range")));
    }
    let examples = objective_examples(dataset, objective, 1.0);
    if examples.is_empty() {
        return Err(Error::Training(format!(
            "objective {objective} ({}) has no usable labels",
            dataset.objectives[objective].name
        )));
    }
    let (params, log) = fit(dataset, examples, dataset.num_objectives(), config)?;
    Ok((finish(config, params, Lineage::Teacher { objective })?, log))
}

/// Trains one teacher per objective, in parallel. Teacher `k` uses seed `config.seed + k`.
pub fn train_teachers(dataset: &Dataset, config: &TrainConfig) -> Result<Vec<Model>> {
    (0..dataset.num_objectives())
        .into_par_iter()
        .map(|k| train_teacher(dataset, k, &config.with_seed(config.seed.wrapping_add(k as u64))))
        .collect()
}

/// Primary labels only; the student trainer with `alpha = 1` reproduces this bit for bit.
pub fn train_hard_only(dataset: &Dataset, config: &TrainConfig) -> Result<Model> {
    let examples = objective_examples(dataset, 0, 1.0);
    if examples.is_empty() {
        return Err(Error::Training("dataset has no primary labels".into()));
    }
    let (params, _) = fit(dataset, examples, dataset.num_objectives(), config)?;
    finish(
        config,
        params,
        Lineage::Baseline {
            baseline: BaselineKind::HardOnly,
        },
    )
}

/// Per item `Σ_k ω_k · z_k` over raw teacher scores, ω normalized.
pub fn fusion_serve_scores(teachers: &TeacherEnsemble, group: &QueryGroup) -> Result<Vec<f64>> {
    let w = teachers.normalized_weights();
    let features = group.features();
    let mut out = vec![0.0; group.len()];
    for (t, wk) in teachers.models.iter().zip(&w) {
        let z = t.score(&features)?;
        for (o, s) in out.iter_mut().zip(z) {
            *o += wk * s;
        }
    }
    Ok(out)
}

/// Raw-score fusion of frozen teachers over every group of `dataset`.
pub fn fuse_soft_labels(teachers: &TeacherEnsemble, dataset: &Dataset) -> Result<SoftLabelSet> {
    for t in &teachers.models {
        dims_match(t, dataset)?;
    }
    let entries = dataset
        .groups
        .par_iter()
        .map(|g| {
            Ok(SoftLabels {
                query_id: g.query_id,
                scores: fusion_serve_scores(teachers, g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SoftLabelSet {
        provenance: SoftLabelProvenance::TeacherFusion {
            weights: teachers.normalized_weights(),
            teachers: teachers.fingerprints(),
        },
        entries,
    })
}

/// Fusion in distribution space: per group `log Σ_k ω_k softmax(z_k)`, so that
/// the target distribution (at teacher temperature 1) is exactly the mixture.
pub fn fuse_soft_distributions(teachers: &TeacherEnsemble, dataset: &Dataset) -> Result<SoftLabelSet> {
    for t in &teachers.models {
        dims_match(t, dataset)?;
    }
    let w = teachers.normalized_weights();
    let entries = dataset
        .groups
        .par_iter()
        .map(|g| {
            let features = g.features();
            let mut mix = vec![0.0; g.len()];
            for (t, wk) in teachers.models.iter().zip(&w) {
                let p = softmax_unchecked(&t.score(&features)?, 1.0);
                for (m, pi) in mix.iter_mut().zip(p) {
                    *m += wk * pi;
                }
            }
            Ok(SoftLabels {
                query_id: g.query_id,
                scores: mix.iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SoftLabelSet {
        provenance: SoftLabelProvenance::DistributionFusion {
            weights: w,
            teachers: teachers.fingerprints(),
        },
        entries,
    })
}

/// Adds `rule.beta` to the raw soft score of every matching item.
pub fn inject_boost(soft: &SoftLabelSet, rule: &BoostRule, dataset: &Dataset) -> Result<SoftLabelSet> {
    rule.predicate.validate()?;
    if !rule.beta.is_finite() {
        return Err(Error::config("boost beta must be finite"));
    }
    soft.check_aligned(dataset)?;
    let entries = soft
        .entries
        .iter()
        .zip(&dataset.groups)
        .map(|(e, g)| SoftLabels {
            query_id: e.query_id,
            scores: e
                .scores
                .iter()
                .zip(&g.items)
                .map(|(&s, item)| if rule.predicate.matches(item) { s + rule.beta } else { s })
                .collect(),
        })
        .collect();
    Ok(SoftLabelSet {
        provenance: SoftLabelProvenance::Boosted {
            rule: rule.clone(),
            base: Box::new(soft.provenance.clone()),
        },
        entries,
    })
}

/// Hard = 0, soft = 1 in [`TrainingLog`] term tags for students.
const HARD_TAG: usize = 0;
const SOFT_TAG: usize = 1;

fn student_examples(
    dataset: &Dataset,
    soft_targets: Vec<Vec<(usize, f64, LabelDistribution)>>,
    config: &DistillConfig,
) -> Vec<Example> {
    soft_targets
        .into_iter()
        .enumerate()
        .map(|(g, soft)| {
            let mut terms = Vec::with_capacity(1 + soft.len());
            if config.alpha > 0.0 {
                if let Some(target) = dataset.hard_target(g) {
                    terms.push(Term {
                        tag: HARD_TAG,
                        weight: config.alpha,
                        target,
                        temperature: 1.0,
                    });
                }
            }
            if config.alpha < 1.0 {
                for (tag, w, target) in soft {
                    terms.push(Term {
                        tag,
                        weight: (1.0 - config.alpha) * w,
                        target,
                        temperature: config.temperature,
                    });
                }
            }
            Example { group: g, terms }
        })
        .collect()
}

fn train_student_inner(
    dataset: &Dataset,
    soft: &SoftLabelSet,
    config: &DistillConfig,
    lineage: Lineage,
) -> Result<(Model, TrainingLog)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Training("cannot train a student on an empty dataset".into()));
    }
    soft.check_aligned(dataset)?;
    let targets = (0..soft.len())
        .map(|i| Ok(vec![(SOFT_TAG, 1.0, soft.distribution(i, config.teacher_temperature)?)]))
        .collect::<Result<Vec<_>>>()?;
    let examples = student_examples(dataset, targets, config);
    let (params, log) = fit(dataset, examples, 2, &config.train)?;
    Ok((finish(&config.train, params, lineage)?, log))
}

/// Distills a first-generation student from `soft` and the primary labels.
pub fn train_student(dataset: &Dataset, soft: &SoftLabelSet, config: &DistillConfig) -> Result<Model> {
    Ok(train_student_with_log(dataset, soft, config)?.0)
}

pub fn train_student_with_log(
    dataset: &Dataset,
    soft: &SoftLabelSet,
    config: &DistillConfig,
) -> Result<(Model, TrainingLog)> {
    let lineage = Lineage::Student {
        version: 0,
        parent: None,
        soft_labels: soft.provenance.clone(),
    };
    train_student_inner(dataset, soft, config, lineage)
}

/// Student with one soft term per teacher, `(1−α)·ω_k·CE(p_T, softmax(z_k))`,
/// instead of a single term against the fused target. Term tag `1 + k` is teacher `k`.
pub fn train_student_per_teacher(
    dataset: &Dataset,
    teachers: &TeacherEnsemble,
    config: &DistillConfig,
) -> Result<(Model, TrainingLog)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Training("cannot train a student on an empty dataset".into()));
    }
    for t in &teachers.models {
        dims_match(t, dataset)?;
    }
    let w = teachers.normalized_weights();
    let targets = dataset
        .groups
        .par_iter()
        .map(|g| {
            let features = g.features();
            teachers
                .models
                .iter()
                .zip(&w)
                .enumerate()
                .map(|(k, (t, &wk))| {
                    let z = t.score(&features)?;
                    Ok((SOFT_TAG + k, wk, listwise_softmax(&z, config.teacher_temperature)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let examples = student_examples(dataset, targets, config);
    let (params, log) = fit(dataset, examples, 1 + teachers.models.len(), &config.train)?;
    let lineage = Lineage::Student {
        version: 0,
        parent: None,
        soft_labels: SoftLabelProvenance::DistributionFusion {
            weights: w,
            teachers: teachers.fingerprints(),
        },
    };
    Ok((finish(&config.train, params, lineage)?, log))
}

/// Soft labels for the next generation: the previous student's raw scores on `dataset`.
pub fn self_distill_labels(prev: &Model, dataset: &Dataset) -> Result<SoftLabelSet> {
    let version = prev
        .lineage
        .student_version()
        .ok_or_else(|| Error::input("self-distillation needs a student model as its source"))?;
    let scores = score_dataset(prev, dataset)?;
    Ok(SoftLabelSet {
        provenance: SoftLabelProvenance::SelfDistill {
            version: version + 1,
            source: prev.fingerprint(),
        },
        entries: dataset
            .groups
            .iter()
            .zip(scores)
            .map(|(g, scores)| SoftLabels {
                query_id: g.query_id,
                scores,
            })
            .collect(),
    })
}

/// Next student generation trained on `dataset_new` against the previous
/// student's scores. No teacher is involved.
pub fn self_distill_step(prev: &Model, dataset_new: &Dataset, config: &DistillConfig) -> Result<Model> {
    if prev.config.layer_dims != config.train.mlp.layer_dims {
        return Err(Error::input(
            "self-distillation keeps the model structure; layer_dims differ",
        ));
    }
    let soft = self_distill_labels(prev, dataset_new)?;
    self_distill_from_labels(prev, dataset_new, &soft, config)
}

/// Like [`self_distill_step`] with precomputed (possibly boosted) labels.
pub fn self_distill_from_labels(
    prev: &Model,
    dataset_new: &Dataset,
    soft: &SoftLabelSet,
    config: &DistillConfig,
) -> Result<Model> {
    let version = prev
        .lineage
        .student_version()
        .ok_or_else(|| Error::input("self-distillation needs a student model as its source"))?;
    let lineage = Lineage::Student {
        version: version + 1,
        parent: Some(prev.fingerprint()),
        soft_labels: soft.provenance.clone(),
    };
    Ok(train_student_inner(dataset_new, soft, config, lineage)?.0)
}

/// One network on `Σ_k ω_k · CE_k`, each objective's term present only where it has a label.
pub fn train_scalarized_baseline(dataset: &Dataset, objective_weights: &[f64], config: &TrainConfig) -> Result<Model> {
    Ok(train_scalarized_baseline_with_log(dataset, objective_weights, config)?.0)
}

pub fn train_scalarized_baseline_with_log(
    dataset: &Dataset,
    objective_weights: &[f64],
    config: &TrainConfig,
) -> Result<(Model, TrainingLog)> {
    let k = dataset.num_objectives();
    if objective_weights.len() != k {
        return Err(Error::config(format!(
            "need {k} objective weights, got {}",
            objective_weights.len()
        )));
    }
    if objective_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::config("objective weights must be finite and nonnegative"));
    }
    if objective_weights.iter().all(|&w| w == 0.0) {
        return Err(Error::config("objective weights are all zero"));
    }
    let examples: Vec<Example> = (0..dataset.len())
        .map(|g| Example {
            group: g,
            terms: (0..k)
                .filter(|&o| objective_weights[o] > 0.0)
                .filter_map(|o| {
                    dataset.objective_target(g, o).map(|target| Term {
                        tag: o,
                        weight: objective_weights[o],
                        target,
                        temperature: 1.0,
                    })
                })
                .collect(),
        })
        .collect();
    let (params, log) = fit(dataset, examples, k, config)?;
    Ok((
        finish(
            config,
            params,
            Lineage::Baseline {
                baseline: BaselineKind::Scalarized,
            },
        )?,
        log,
    ))
}
