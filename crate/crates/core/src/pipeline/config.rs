use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::GeneratorConfig;
use crate::distill::{BoostPredicate, DistillConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_TAU_THRESHOLD;

pub const DEFAULT_PRIMARY_WEIGHT: f64 = 0.6;

/// Time windows for the self-distillation chain, in days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfDistillStudyConfig {
    pub window_start: u32,
    pub window_days: u32,
    /// Each generation's window starts this many days after the previous one.
    pub shift_days: u32,
    /// Number of self-distillation steps after V0.
    pub chain_depth: u32,
}

impl Default for SelfDistillStudyConfig {
    fn default() -> Self {
        Self {
            window_start: 0,
            window_days: 20,
            shift_days: 5,
            chain_depth: 2,
        }
    }
}

impl SelfDistillStudyConfig {
    /// `[start, end)` of generation `j`.
    pub fn window(&self, j: u32) -> (u32, u32) {
        let start = self.window_start + j * self.shift_days;
        (start, start + self.window_days)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SxSConfig {
    pub tau_threshold: f64,
    /// Compare only the top `depth` items of the first model's page.
    pub depth: Option<usize>,
}

impl Default for SxSConfig {
    fn default() -> Self {
        Self {
            tau_threshold: DEFAULT_TAU_THRESHOLD,
            depth: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostStudyConfig {
    pub predicate: BoostPredicate,
    pub exposure_k: usize,
    /// Both arms are calibrated to the baseline's boosted exposure plus this amount.
    pub target_lift: f64,
    pub tolerance: f64,
    /// Budget per calibrated parameter.
    pub max_iterations: usize,
    /// First upper bracket tried for β and γ; doubled until it overshoots.
    pub initial_bracket: f64,
}

impl Default for BoostStudyConfig {
    fn default() -> Self {
        Self {
            predicate: BoostPredicate::RatingAtLeast { rho: 4.5 },
            exposure_k: 5,
            target_lift: 0.1,
            tolerance: 0.01,
            max_iterations: 50,
            initial_bracket: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    pub teacher: TrainConfig,
    pub distill: DistillConfig,
    /// Teacher fusion weights. When absent the primary teacher gets
    /// `DEFAULT_PRIMARY_WEIGHT` and the secondaries share the rest evenly.
    pub fusion_weights: Option<Vec<f64>>,
    /// Objective weights of the scalarized baseline; the fusion weights when absent.
    pub scalarized_weights: Option<Vec<f64>>,
    pub alpha_sweep: Vec<f64>,
    /// Groups on or after this day are held out for evaluation.
    pub test_boundary_day: u32,
    /// Independent data + training seeds per study; headline numbers are means.
    pub replicates: usize,
    pub exposure_k: usize,
    pub self_distill: SelfDistillStudyConfig,
    /// Models per family in the irreproducibility study.
    pub num_seeds: usize,
    pub sxs: SxSConfig,
    pub boost: BoostStudyConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            teacher: TrainConfig::default(),
            distill: DistillConfig::default(),
            fusion_weights: None,
            scalarized_weights: None,
            alpha_sweep: vec![0.0, 0.2, 0.5, 1.0],
            test_boundary_day: 30,
            replicates: 1,
            exposure_k: 10,
            self_distill: SelfDistillStudyConfig::default(),
            num_seeds: 4,
            sxs: SxSConfig::default(),
            boost: BoostStudyConfig::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn fusion_weights(&self) -> Vec<f64> {
        let k = self.generator.k;
        self.fusion_weights.clone().unwrap_or_else(|| {
            let rest = (1.0 - DEFAULT_PRIMARY_WEIGHT) / (k - 1) as f64;
            let mut w = vec![rest; k];
            w[0] = DEFAULT_PRIMARY_WEIGHT;
            w
        })
    }

    pub fn scalarized_weights(&self) -> Vec<f64> {
        self.scalarized_weights.clone().unwrap_or_else(|| self.fusion_weights())
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.teacher.validate()?;
        self.distill.validate()?;
        let m = self.generator.m;
        for (name, dims) in [
            ("teacher.mlp", &self.teacher.mlp.layer_dims),
            ("distill.train.mlp", &self.distill.train.mlp.layer_dims),
        ] {
            if dims[0] != m {
                return Err(Error::config(format!(
                    "{name}.layer_dims starts with {}, but generator.m is {m}",
                    dims[0]
                )));
            }
        }
        let k = self.generator.k;
        for (name, w) in [
            ("fusion_weights", &self.fusion_weights),
            ("scalarized_weights", &self.scalarized_weights),
        ] {
            if let Some(w) = w {
                if w.len() != k {
                    return Err(Error::config(format!("{name} needs {k} entries, got {}", w.len())));
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::config(format!("{name} must be nonnegative with a positive sum")));
                }
            }
        }
        if self.alpha_sweep.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::config("alpha_sweep values must lie in [0, 1]"));
        }
        if self.test_boundary_day == 0 || self.test_boundary_day >= self.generator.num_days {
            return Err(Error::config(format!(
                "test_boundary_day must lie in 1..{}, got {}",
                self.generator.num_days, self.test_boundary_day
            )));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates must be at least 1"));
        }
        if self.exposure_k == 0 || self.boost.exposure_k == 0 {
            return Err(Error::config("exposure_k must be positive"));
        }
        if !(self.sxs.tau_threshold.is_finite()) || self.sxs.depth == Some(0) {
            return Err(Error::config("sxs needs a finite threshold and a positive depth"));
        }
        self.boost.predicate.validate()?;
        let b = &self.boost;
        if !(b.tolerance > 0.0 && b.target_lift.is_finite() && b.target_lift >= 0.0 && b.initial_bracket > 0.0) {
            return Err(Error::config(
                "boost needs tolerance > 0, target_lift >= 0 and initial_bracket > 0",
            ));
        }
        Ok(())
    }

    /// Checks specific to the self-distillation study.
    pub fn validate_self_distill(&self) -> Result<()> {
        let s = &self.self_distill;
        if s.window_days == 0 || s.chain_depth == 0 || s.shift_days == 0 {
            return Err(Error::config(
                "self_distill needs positive window_days, shift_days and chain_depth",
            ));
        }
        let (_, end) = s.window(s.chain_depth);
        if end > self.test_boundary_day {
            return Err(Error::config(format!(
                "last self-distillation window ends on day {end}, past test_boundary_day {}",
                self.test_boundary_day
            )));
        }
        Ok(())
    }

    pub fn validate_repro(&self) -> Result<()> {
        if self.num_seeds < 2 {
            return Err(Error::config(format!(
                "the irreproducibility study needs num_seeds >= 2, got {}",
                self.num_seeds
            )));
        }
        Ok(())
    }

    /// Generator settings of replicate `r`.
    pub(crate) fn generator_for(&self, r: usize) -> GeneratorConfig {
        GeneratorConfig {
            seed: self.generator.seed.wrapping_add(r as u64),
            ..self.generator.clone()
        }
    }

    pub(crate) fn teacher_for(&self, r: usize) -> TrainConfig {
        self.teacher.with_seed(self.teacher.seed.wrapping_add(1000 * r as u64))
    }

    pub(crate) fn distill_for(&self, r: usize) -> DistillConfig {
        self.distill
            .with_seed(self.distill.train.seed.wrapping_add(1000 * r as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        c.validate_self_distill().unwrap();
        c.validate_repro().unwrap();
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        assert!(ExperimentConfig::from_json(r#"{"generator": {"bogus": 1}}"#).is_err());
        let partial = ExperimentConfig::from_json(r#"{"num_seeds": 3}"#).unwrap();
        assert_eq!(partial.num_seeds, 3);
        assert_eq!(partial.generator, GeneratorConfig::default());
    }

    #[test]
    fn inconsistent_dims_rejected() {
        let mut c = ExperimentConfig::default();
        c.generator.m = 8;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn single_seed_rejected_for_repro() {
        let c = ExperimentConfig {
            num_seeds: 1,
            ..Default::default()
        };
        assert!(matches!(c.validate_repro(), Err(Error::Config(_))));
    }

    #[test]
    fn chain_must_end_before_test_days() {
        let mut c = ExperimentConfig::default();
        c.self_distill.chain_depth = 3;
        assert!(c.validate_self_distill().is_err());
    }
}
