use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::{evaluate_scores, EvalOptions, QueryMetrics, RankingMetricsReport, SxSReport};
use crate::model::{Lineage, Model};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub role: String,
    pub replicate: usize,
    pub hash: String,
    pub groups: usize,
    pub items: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRef {
    pub name: String,
    pub replicate: usize,
    pub hash: String,
    pub lineage: Lineage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub name: String,
    pub replicate: usize,
    /// Checkpoint hashes whose scores produced this arm (several for serving-time fusion).
    pub checkpoints: Vec<String>,
    /// Hash of the evaluation dataset.
    pub dataset: String,
    /// Arm settings such as `alpha`, `beta`, `gamma`.
    pub settings: BTreeMap<String, f64>,
    pub metrics: RankingMetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub replicate: usize,
    pub sxs: SxSReport,
}

/// `value = arm − baseline` for one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub metric: String,
    pub arm: String,
    pub baseline: String,
    pub replicate: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub arm: String,
    pub parameter: String,
    pub replicate: usize,
    pub target: f64,
    pub tolerance: f64,
    pub value: f64,
    pub exposure: f64,
    pub iterations: usize,
    /// Every `(parameter, exposure)` evaluated, in order.
    pub history: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub study: String,
    pub config: ExperimentConfig,
    pub datasets: Vec<DatasetRef>,
    pub checkpoints: Vec<CheckpointRef>,
    pub arms: Vec<ArmReport>,
    pub comparisons: Vec<Comparison>,
    pub deltas: Vec<Delta>,
    pub calibrations: Vec<CalibrationRecord>,
    /// Headline numbers, averaged over replicates.
    pub summary: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn arm(&self, name: &str, replicate: usize) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.name == name && a.replicate == replicate)
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# {}\n", self.study);
        if !self.summary.is_empty() {
            md.push_str("## Summary\n\n| metric | value |\n|---|---|\n");
            for (k, v) in &self.summary {
                let _ = writeln!(md, "| {k} | {v:.6} |");
            }
            md.push('\n');
        }
        md.push_str("## Arms\n\n| arm | rep | NDCG@5 | NDCG@10 | NDCG | exposure | boosted | settings |\n");
        md.push_str("|---|---|---|---|---|---|---|---|\n");
        for a in &self.arms {
            let m = &a.metrics;
            let exposure: Vec<String> = m
                .objective_exposure
                .iter()
                .map(|e| e.map_or("-".into(), |v| format!("{v:.4}")))
                .collect();
            let settings: Vec<String> = a.settings.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
            let _ = writeln!(
                md,
                "| {} | {} | {:.4} | {:.4} | {:.4} | {} | {} | {} |",
                a.name,
                a.replicate,
                m.ndcg_at_5,
                m.ndcg_at_10,
                m.ndcg_full,
                exposure.join(" / "),
                m.boosted_exposure.map_or("-".into(), |v| format!("{v:.4}")),
                settings.join(", ")
            );
        }
        if !self.deltas.is_empty() {
            md.push_str("\n## Deltas\n\n| metric | arm | baseline | rep | delta |\n|---|---|---|---|---|\n");
            for d in &self.deltas {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {:+.5} |",
                    d.metric, d.arm, d.baseline, d.replicate, d.value
                );
            }
        }
        if !self.comparisons.is_empty() {
            md.push_str(
                "\n## Side by side\n\n| a | b | rep | change rate | mean tau | PD |\n|---|---|---|---|---|---|\n",
            );
            for c in &self.comparisons {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {:.4} | {:.4} | {:.4} |",
                    c.a, c.b, c.replicate, c.sxs.change_rate, c.sxs.mean_tau, c.sxs.pd
                );
            }
        }
        if !self.calibrations.is_empty() {
            md.push_str("\n## Calibration\n\n| arm | parameter | rep | value | exposure | target | iterations |\n");
            md.push_str("|---|---|---|---|---|---|---|\n");
            for c in &self.calibrations {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {:.5} | {:.4} | {:.4} | {} |",
                    c.arm, c.parameter, c.replicate, c.value, c.exposure, c.target, c.iterations
                );
            }
        }
        md.push_str("\n## Provenance\n\n| kind | name | rep | sha256 |\n|---|---|---|---|\n");
        for d in &self.datasets {
            let _ = writeln!(md, "| dataset | {} | {} | {} |", d.role, d.replicate, d.hash);
        }
        for c in &self.checkpoints {
            let _ = writeln!(md, "| checkpoint | {} | {} | {} |", c.name, c.replicate, c.hash);
        }
        md
    }
}

#[derive(Clone, Debug)]
pub struct MetricsRow {
    pub arm: String,
    pub replicate: usize,
    pub metrics: QueryMetrics,
}

/// A finished study: the report plus everything it refers to.
#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub report: ExperimentReport,
    pub models: Vec<Model>,
    pub rows: Vec<MetricsRow>,
}

impl StudyOutput {
    /// Writes `report.json`, `report.md`, `metrics.csv` and `checkpoints/<sha256>.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let ckpt_dir = dir.join("checkpoints");
        fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;
        for m in &self.models {
            let path = ckpt_dir.join(format!("{}.json", m.checkpoint_hash()));
            if !path.exists() {
                m.save(&path)?;
            }
        }
        let json = dir.join("report.json");
        fs::write(&json, self.report.to_json()).map_err(|e| Error::io(&json, e))?;
        let md = dir.join("report.md");
        fs::write(&md, self.report.to_markdown()).map_err(|e| Error::io(&md, e))?;
        self.write_csv(&dir.join("metrics.csv"))
    }

    fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let objectives = self
            .report
            .config
            .generator
            .objective_specs()
            .into_iter()
            .map(|o| format!("exposure_{}", o.name));
        let mut header = vec![
            "study".to_string(),
            "replicate".into(),
            "arm".into(),
            "query_id".into(),
            "judged".into(),
            "ndcg_at_5".into(),
            "ndcg_at_10".into(),
            "ndcg_full".into(),
        ];
        header.extend(objectives);
        header.push("boosted_exposure".into());
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            let q = &r.metrics;
            let mut rec = vec![
                self.report.study.clone(),
                r.replicate.to_string(),
                r.arm.clone(),
                q.query_id.to_string(),
                q.judged.to_string(),
                q.ndcg_at_5.to_string(),
                q.ndcg_at_10.to_string(),
                q.ndcg_full.to_string(),
            ];
            rec.extend(q.objective_exposure.iter().map(|e| opt(*e)));
            rec.push(opt(q.boosted_exposure));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Collects provenance, arms and per-query rows while a study runs.
pub(crate) struct Recorder {
    report: ExperimentReport,
    models: Vec<Model>,
    rows: Vec<MetricsRow>,
}

impl Recorder {
    pub(crate) fn new(study: &str, config: &ExperimentConfig) -> Self {
        // Reports describe the experiment, not where it was written.
        let config = ExperimentConfig {
            output_dir: None,
            ..config.clone()
        };
        Self {
            report: ExperimentReport {
                study: study.into(),
                config,
                datasets: Vec::new(),
                checkpoints: Vec::new(),
                arms: Vec::new(),
                comparisons: Vec::new(),
                deltas: Vec::new(),
                calibrations: Vec::new(),
                summary: BTreeMap::new(),
            },
            models: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub(crate) fn dataset(&mut self, role: &str, replicate: usize, ds: &Dataset) -> String {
        let hash = ds.content_hash();
        self.report.datasets.push(DatasetRef {
            role: role.into(),
            replicate,
            hash: hash.clone(),
            groups: ds.len(),
            items: ds.num_items(),
        });
        hash
    }

    pub(crate) fn model(&mut self, name: &str, replicate: usize, model: &Model) -> String {
        let hash = model.checkpoint_hash();
        self.report.checkpoints.push(CheckpointRef {
            name: name.into(),
            replicate,
            hash: hash.clone(),
            lineage: model.lineage.clone(),
        });
        if !self.models.iter().any(|m| m.checkpoint_hash() == hash) {
            self.models.push(model.clone());
        }
        hash
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn arm(
        &mut self,
        name: &str,
        replicate: usize,
        checkpoints: Vec<String>,
        dataset: &Dataset,
        dataset_hash: &str,
        scores: &[Vec<f64>],
        options: &EvalOptions,
        settings: &[(&str, f64)],
    ) -> Result<RankingMetricsReport> {
        let (metrics, rows) = evaluate_scores(dataset, scores, options)?;
        self.rows.extend(rows.into_iter().map(|metrics| MetricsRow {
            arm: name.into(),
            replicate,
            metrics,
        }));
        self.report.arms.push(ArmReport {
            name: name.into(),
            replicate,
            checkpoints,
            dataset: dataset_hash.into(),
            settings: settings.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            metrics: metrics.clone(),
        });
        Ok(metrics)
    }

    pub(crate) fn compare(&mut self, a: &str, b: &str, replicate: usize, sxs: SxSReport) {
        self.report.comparisons.push(Comparison {
            a: a.into(),
            b: b.into(),
            replicate,
            sxs,
        });
    }

    pub(crate) fn delta(&mut self, metric: &str, arm: &str, baseline: &str, replicate: usize, value: f64) {
        self.report.deltas.push(Delta {
            metric: metric.into(),
            arm: arm.into(),
            baseline: baseline.into(),
            replicate,
            value,
        });
    }

    pub(crate) fn calibration(&mut self, record: CalibrationRecord) {
        self.report.calibrations.push(record);
    }

    pub(crate) fn summary(&mut self, key: &str, value: f64) {
        self.report.summary.insert(key.into(), value);
    }

    pub(crate) fn finish(self) -> StudyOutput {
        StudyOutput {
            report: self.report,
            models: self.models,
            rows: self.rows,
        }
    }
}
