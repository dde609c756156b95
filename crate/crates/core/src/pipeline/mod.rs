//! Experiment configuration, the four studies and their on-disk reports.
//!
//! Every study returns a [`StudyOutput`]; [`StudyOutput::write`] lays it out as
//!
//! ```text
//! <dir>/report.json
//! <dir>/report.md
//! <dir>/metrics.csv
//! <dir>/checkpoints/<sha256>.json
//! ```

mod config;
mod report;
mod studies;

use serde::{Deserialize, Serialize};

pub use config::{BoostStudyConfig, ExperimentConfig, SelfDistillStudyConfig, SxSConfig, DEFAULT_PRIMARY_WEIGHT};
pub use report::{
    ArmReport, CalibrationRecord, CheckpointRef, Comparison, DatasetRef, Delta, ExperimentReport, MetricsRow,
    StudyOutput,
};
pub use studies::{
    boost_arms, study_adhoc_boost, study_distill_vs_baselines, study_irreproducibility, study_self_distillation,
    BoostArms,
};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Distill,
    SelfDistill,
    Repro,
    Boost,
}

pub fn run_study(study: Study, config: &ExperimentConfig) -> Result<StudyOutput> {
    match study {
        Study::Distill => study_distill_vs_baselines(config),
        Study::SelfDistill => study_self_distillation(config),
        Study::Repro => study_irreproducibility(config),
        Study::Boost => study_adhoc_boost(config),
    }
}
