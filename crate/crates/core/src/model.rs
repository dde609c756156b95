//! Trained rankers and their JSON checkpoint format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distill::SoftLabelProvenance;
use crate::error::{Error, Result};
use crate::nn::{mlp_forward, LayerParams, MlpConfig, ParameterSet};

pub const CHECKPOINT_FORMAT: &str = "moltr-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Primary labels only.
    HardOnly,
    /// One network on a weighted sum of per-objective listwise losses.
    Scalarized,
}

/// Where a set of parameters came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lineage {
    /// Freshly initialized, never trained.
    Init,
    Teacher {
        objective: usize,
    },
    Student {
        version: u32,
        /// Fingerprint of the previous student when this one was self-distilled.
        parent: Option<String>,
        soft_labels: SoftLabelProvenance,
    },
    Baseline {
        baseline: BaselineKind,
    },
}

impl Lineage {
    pub fn student_version(&self) -> Option<u32> {
        match self {
            Lineage::Student { version, .. } => Some(*version),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: MlpConfig,
    pub params: ParameterSet,
    pub lineage: Lineage,
    /// Seed of the run that produced the parameters.
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: MlpConfig,
    config_hash: String,
    seed: u64,
    layers: Vec<LayerParams>,
    lineage: Lineage,
}

impl Model {
    pub fn new(config: MlpConfig, params: ParameterSet, lineage: Lineage, seed: u64) -> Result<Self> {
        params.check(&config)?;
        Ok(Self {
            config,
            params,
            lineage,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim()
    }

    pub fn fingerprint(&self) -> String {
        self.params.fingerprint()
    }

    /// Scores one item list.
    pub fn score<R: AsRef<[f64]>>(&self, features: &[R]) -> Result<Vec<f64>> {
        Ok(mlp_forward(&self.params, self.config.activation, features)?.0)
    }

    pub fn to_json(&self) -> String {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            config_hash: self.config.hash(),
            seed: self.seed,
            layers: self.params.layers.clone(),
            lineage: self.lineage.clone(),
        };
        serde_json::to_string_pretty(&file).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
            return Err(Error::input(format!(
                "unsupported checkpoint format {} v{}",
                file.format, file.version
            )));
        }
        if file.config_hash != file.config.hash() {
            return Err(Error::input("checkpoint config_hash does not match its config"));
        }
        Model::new(
            file.config,
            ParameterSet { layers: file.layers },
            file.lineage,
            file.seed,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text)
    }

    /// Content hash of the serialized checkpoint.
    pub fn checkpoint_hash(&self) -> String {
        crate::util::sha256_hex(self.to_json().as_bytes())
    }
}
