//! The shared minibatch SGD loop.
//!
//! Every trainer in this crate reduces to a list of examples, each a query
//! group plus weighted listwise CE terms. Examples without terms are dropped
//! before shuffling, so the batch sequence depends only on which groups carry
//! a usable target and on the run seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{
    backward_into, listwise_terms_loss, mlp_forward, sgd_step_in_place, GradientSet, LabelDistribution, ListwiseTerm,
    ParameterSet,
};

#[derive(Clone, Debug)]
pub(crate) struct Term {
    /// Which loss component this is (objective index, or hard/soft slot).
    pub tag: usize,
    pub weight: f64,
    pub target: LabelDistribution,
    pub temperature: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Example {
    pub group: usize,
    pub terms: Vec<Term>,
}

/// Per-run training bookkeeping.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Number of groups that carried at least one loss term.
    pub examples: usize,
    /// Mean per-example loss for each epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean per-example loss of every minibatch, in order.
    pub batch_losses: Vec<f64>,
    /// Examples containing each term tag.
    pub term_examples: Vec<usize>,
    /// Minibatches (across all epochs) in which each term tag appears.
    pub term_batches: Vec<usize>,
}

pub(crate) fn fit(
    dataset: &Dataset,
    examples: Vec<Example>,
    num_tags: usize,
    config: &TrainConfig,
) -> Result<(ParameterSet, TrainingLog)> {
    config.validate()?;
    if config.mlp.input_dim() != dataset.m {
        return Err(Error::input(format!(
            "model expects {} features, dataset has {}",
            config.mlp.input_dim(),
            dataset.m
        )));
    }
    let examples: Vec<Example> = examples
        .into_iter()
        .filter(|e| e.terms.iter().any(|t| t.weight > 0.0))
        .map(|mut e| {
            e.terms.retain(|t| t.weight > 0.0);
            e
        })
        .collect();
    if examples.is_empty() {
        return Err(Error::Training("no query group carries a training target".into()));
    }

    let mut log = TrainingLog {
        examples: examples.len(),
        term_examples: vec![0; num_tags],
        term_batches: vec![0; num_tags],
        ..Default::default()
    };
    for e in &examples {
        for t in &e.terms {
            log.term_examples[t.tag] += 1;
        }
    }

    let mut params = ParameterSet::init(&config.mlp)?;
    let activation = config.mlp.activation;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grads = GradientSet::zeros_like(&params);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.learning_rate / (1.0 + config.lr_decay * epoch as f64);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.scale(0.0);
            let mut batch_loss = 0.0;
            let mut seen = vec![false; num_tags];
            for &ei in batch {
                let ex = &examples[ei];
                let group = &dataset.groups[ex.group];
                let (scores, trace) = mlp_forward(&params, activation, &group.features())?;
                let terms: Vec<ListwiseTerm<'_>> = ex
                    .terms
                    .iter()
                    .map(|t| ListwiseTerm {
                        weight: t.weight,
                        target: &t.target,
                        temperature: t.temperature,
                    })
                    .collect();
                let (loss, dz) = listwise_terms_loss(&scores, &terms)?;
                batch_loss += loss;
                backward_into(&params, &trace, &dz, &mut grads)?;
                for t in &ex.terms {
                    seen[t.tag] = true;
                }
            }
            for (count, s) in log.term_batches.iter_mut().zip(seen) {
                *count += usize::from(s);
            }
            grads.scale(1.0 / batch.len() as f64);
            sgd_step_in_place(&mut params, &grads, lr)?;
            epoch_loss += batch_loss;
            log.batch_losses.push(batch_loss / batch.len() as f64);
        }
        log.epoch_losses.push(epoch_loss / examples.len() as f64);
    }
    Ok((params, log))
}
