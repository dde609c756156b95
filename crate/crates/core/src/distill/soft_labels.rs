//! Soft-label sets: per-item target scores aligned with a dataset.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BoostRule;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{listwise_softmax, LabelDistribution};

pub const SOFT_LABELS_FORMAT: &str = "moltr-soft-labels";

/// How a soft-label set was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SoftLabelProvenance {
    /// Weighted sum of raw teacher scores.
    TeacherFusion { weights: Vec<f64>, teachers: Vec<String> },
    /// Log of the weighted mixture of teacher softmax distributions.
    DistributionFusion { weights: Vec<f64>, teachers: Vec<String> },
    /// Scores of the previous student, used to train student `version`.
    SelfDistill { version: u32, source: String },
    Boosted {
        rule: BoostRule,
        base: Box<SoftLabelProvenance>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftLabels {
    pub query_id: u64,
    pub scores: Vec<f64>,
}

/// Raw soft scores per query group. The training target for a group is
/// `softmax(scores / T_teacher)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftLabelSet {
    pub provenance: SoftLabelProvenance,
    pub entries: Vec<SoftLabels>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    provenance: SoftLabelProvenance,
}

impl SoftLabelSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Target distribution for entry `i`.
    pub fn distribution(&self, i: usize, teacher_temperature: f64) -> Result<LabelDistribution> {
        listwise_softmax(&self.entries[i].scores, teacher_temperature)
    }

    /// Entries match the dataset's groups one to one, in order and size.
    pub fn check_aligned(&self, dataset: &Dataset) -> Result<()> {
        if self.entries.len() != dataset.len() {
            return Err(Error::input(format!(
                "soft labels cover {} groups, dataset has {}",
                self.entries.len(),
                dataset.len()
            )));
        }
        for (e, g) in self.entries.iter().zip(&dataset.groups) {
            if e.query_id != g.query_id || e.scores.len() != g.len() {
                return Err(Error::input(format!(
                    "soft labels for query {} do not line up with dataset query {} ({} vs {} items)",
                    e.query_id,
                    g.query_id,
                    e.scores.len(),
                    g.len()
                )));
            }
            if e.scores.iter().any(|s| !s.is_finite()) {
                return Err(Error::input(format!("query {}: non-finite soft score", e.query_id)));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        let header = Header {
            format: SOFT_LABELS_FORMAT.into(),
            version: 1,
            provenance: self.provenance.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n").map_err(io)?;
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let parse = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| parse(1, "missing header line".into()))?
            .map_err(|e| Error::io(path, e))?;
        let header: Header = serde_json::from_str(&first).map_err(|e| parse(1, e.to_string()))?;
        if header.format != SOFT_LABELS_FORMAT || header.version != 1 {
            return Err(parse(
                1,
                format!("unsupported format {} v{}", header.format, header.version),
            ));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| parse(i + 2, e.to_string()))?);
        }
        Ok(Self {
            provenance: header.provenance,
            entries,
        })
    }
}
