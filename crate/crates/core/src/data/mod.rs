//! Multi-objective ranking datasets.
//!
//! A [`Dataset`] is a list of [`QueryGroup`]s. Each group is one search: a
//! variable-length list of items with an `n × K` label matrix in which any
//! entry may be missing. Objective 0 is the primary objective (booking); at
//! most one item per group carries a positive primary label.

mod generator;
mod io;

use serde::{Deserialize, Serialize};

pub use generator::{generate_dataset, GeneratorConfig, ItemsRange};
pub use io::{load_dataset, read_dataset, save_dataset, write_dataset, DATASET_FORMAT, DATASET_VERSION};

use crate::error::{Error, Result};
use crate::nn::LabelDistribution;

/// Value written into rating-derived features of items without reviews.
pub const MISSING_FEATURE: f64 = -1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub item_id: u64,
    pub features: Vec<f64>,
    pub review_rating: f64,
    pub is_new: bool,
    /// Per-objective latent utilities known only to the synthetic generator;
    /// empty for logged data. Used for exposure metrics, never as a model input.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub utilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryGroup {
    pub query_id: u64,
    /// Day index.
    pub timestamp: u32,
    pub items: Vec<Item>,
    /// `labels[item][objective]`; `None` is a missing label.
    pub labels: Vec<Vec<Option<u8>>>,
}

impl QueryGroup {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn features(&self) -> Vec<&[f64]> {
        self.items.iter().map(|i| i.features.as_slice()).collect()
    }

    pub fn item_ids(&self) -> Vec<u64> {
        self.items.iter().map(|i| i.item_id).collect()
    }

    pub fn has_label(&self, objective: usize) -> bool {
        self.labels.iter().any(|row| row[objective].is_some())
    }

    /// Binary primary relevance per item (missing counts as 0).
    pub fn primary_relevance(&self) -> Vec<bool> {
        self.labels.iter().map(|row| row[0] == Some(1)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Label 1 is a good outcome.
    Reward,
    /// Label 1 is a bad outcome (cancellation, complaint).
    Cost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub index: usize,
    pub name: String,
    pub polarity: Polarity,
    pub primary: bool,
}

impl ObjectiveSpec {
    /// Whether a present label value marks the item as preferred for this objective.
    pub fn is_positive(&self, label: u8) -> bool {
        match self.polarity {
            Polarity::Reward => label == 1,
            Polarity::Cost => label == 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub objectives: Vec<ObjectiveSpec>,
    /// Feature width.
    pub m: usize,
    pub groups: Vec<QueryGroup>,
}

impl Dataset {
    pub fn new(objectives: Vec<ObjectiveSpec>, m: usize, groups: Vec<QueryGroup>) -> Result<Self> {
        let ds = Self { objectives, m, groups };
        ds.validate()?;
        Ok(ds)
    }

    pub fn empty_like(&self) -> Self {
        Self {
            objectives: self.objectives.clone(),
            m: self.m,
            groups: Vec::new(),
        }
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn num_items(&self) -> usize {
        self.groups.iter().map(QueryGroup::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        validate_objectives(&self.objectives)?;
        for g in &self.groups {
            self.validate_group(g)?;
        }
        Ok(())
    }

    pub(crate) fn validate_group(&self, g: &QueryGroup) -> Result<()> {
        let k = self.objectives.len();
        let q = g.query_id;
        if g.items.len() < 2 {
            return Err(Error::input(format!("query {q}: needs at least 2 items")));
        }
        if g.labels.len() != g.items.len() {
            return Err(Error::input(format!(
                "query {q}: {} label rows for {} items",
                g.labels.len(),
                g.items.len()
            )));
        }
        for (p, (item, row)) in g.items.iter().zip(&g.labels).enumerate() {
            if item.features.len() != self.m {
                return Err(Error::input(format!(
                    "query {q} item {p}: {} features, expected {}",
                    item.features.len(),
                    self.m
                )));
            }
            if item.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("query {q} item {p}: non-finite feature")));
            }
            if !(0.0..=5.0).contains(&item.review_rating) {
                return Err(Error::input(format!(
                    "query {q} item {p}: review_rating {} outside [0, 5]",
                    item.review_rating
                )));
            }
            if !item.utilities.is_empty() && item.utilities.len() != k {
                return Err(Error::input(format!("query {q} item {p}: expected {k} utilities")));
            }
            if row.len() != k {
                return Err(Error::input(format!(
                    "query {q} item {p}: {} labels, expected {k}",
                    row.len()
                )));
            }
            if row.iter().flatten().any(|&v| v > 1) {
                return Err(Error::input(format!("query {q} item {p}: labels must be 0 or 1")));
            }
        }
        let positives = g.labels.iter().filter(|row| row[0] == Some(1)).count();
        if positives > 1 {
            return Err(Error::input(format!(
                "query {q}: {positives} items carry a positive primary label, at most one allowed"
            )));
        }
        Ok(())
    }

    /// Listwise target for objective `k` on group `g`: uniform over items whose
    /// present label is positive for that objective. `None` if there are none.
    pub fn objective_target(&self, g: usize, k: usize) -> Option<LabelDistribution> {
        let spec = &self.objectives[k];
        let weights: Vec<f64> = self.groups[g]
            .labels
            .iter()
            .map(|row| match row[k] {
                Some(v) if spec.is_positive(v) => 1.0,
                _ => 0.0,
            })
            .collect();
        LabelDistribution::from_weights(&weights).ok()
    }

    /// Primary-objective (hard label) target.
    pub fn hard_target(&self, g: usize) -> Option<LabelDistribution> {
        self.objective_target(g, 0)
    }

    pub fn min_timestamp(&self) -> Option<u32> {
        self.groups.iter().map(|g| g.timestamp).min()
    }

    pub fn max_timestamp(&self) -> Option<u32> {
        self.groups.iter().map(|g| g.timestamp).max()
    }

    /// Content hash of the JSON Lines encoding.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        write_dataset(self, &mut buf).expect("writing to memory");
        crate::util::sha256_hex(&buf)
    }

    /// Groups with `start <= timestamp < end`.
    pub fn window(&self, start: u32, end: u32) -> Dataset {
        Dataset {
            objectives: self.objectives.clone(),
            m: self.m,
            groups: self
                .groups
                .iter()
                .filter(|g| g.timestamp >= start && g.timestamp < end)
                .cloned()
                .collect(),
        }
    }
}

pub(crate) fn validate_objectives(objectives: &[ObjectiveSpec]) -> Result<()> {
    if objectives.is_empty() {
        return Err(Error::input("dataset declares no objectives"));
    }
    for (i, o) in objectives.iter().enumerate() {
        if o.index != i {
            return Err(Error::input(format!("objective {} declared at position {i}", o.index)));
        }
        if o.primary != (i == 0) {
            return Err(Error::input("exactly one objective, index 0, must be primary"));
        }
        if objectives[..i].iter().any(|p| p.name == o.name) {
            return Err(Error::input(format!("duplicate objective name {:?}", o.name)));
        }
    }
    Ok(())
}

/// Splits into groups before `boundary_day` and groups on or after it.
///
/// The boundary may sit one day past either end of the observed range, which
/// yields an empty side; anything further out is an input error.
pub fn split_by_time(dataset: &Dataset, boundary_day: u32) -> Result<(Dataset, Dataset)> {
    let (Some(lo), Some(hi)) = (dataset.min_timestamp(), dataset.max_timestamp()) else {
        return Err(Error::input("cannot split an empty dataset by time"));
    };
    if boundary_day.saturating_add(1) < lo || boundary_day > hi.saturating_add(1) {
        return Err(Error::input(format!(
            "boundary day {boundary_day} outside observed range {lo}..={hi}"
        )));
    }
    let (earlier, later): (Vec<_>, Vec<_>) = dataset.groups.iter().cloned().partition(|g| g.timestamp < boundary_day);
    let mut a = dataset.empty_like();
    a.groups = earlier;
    let mut b = dataset.empty_like();
    b.groups = later;
    Ok((a, b))
}

/// Fraction of groups with at least one present label for `objective`.
pub fn label_coverage(dataset: &Dataset, objective: usize) -> Result<f64> {
    if objective >= dataset.num_objectives() {
        return Err(Error::input(format!(
            "objective {objective} out of range (K = {})",
            dataset.num_objectives()
        )));
    }
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let covered = dataset.groups.iter().filter(|g| g.has_label(objective)).count();
    Ok(covered as f64 / dataset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny() -> Dataset {
        let objectives = vec![
            ObjectiveSpec {
                index: 0,
                name: "booking".into(),
                polarity: Polarity::Reward,
                primary: true,
            },
            ObjectiveSpec {
                index: 1,
                name: "cancel".into(),
                polarity: Polarity::Cost,
                primary: false,
            },
        ];
        let item = |id: u64, f: f64| Item {
            item_id: id,
            features: vec![f, 1.0],
            review_rating: 4.0,
            is_new: false,
            utilities: vec![],
        };
        let groups = (0..10u32)
            .map(|d| QueryGroup {
                query_id: d as u64,
                timestamp: d,
                items: vec![item(0, 0.5), item(1, -0.5), item(2, 0.0)],
                labels: if d % 2 == 0 {
                    vec![vec![Some(0), None], vec![Some(1), Some(0)], vec![Some(0), None]]
                } else {
                    vec![vec![None, None]; 3]
                },
            })
            .collect();
        Dataset::new(objectives, 2, groups).unwrap()
    }

    #[test]
    fn split_edges() {
        let ds = tiny();
        let (a, b) = split_by_time(&ds, 0).unwrap();
        assert!(a.is_empty());
        assert_eq!(b.len(), 10);
        let (a, b) = split_by_time(&ds, 10).unwrap();
        assert_eq!((a.len(), b.len()), (10, 0));
        let (a, b) = split_by_time(&ds, 5).unwrap();
        assert!(a.groups.iter().all(|g| g.timestamp < 5));
        assert!(b.groups.iter().all(|g| g.timestamp >= 5));
        assert_eq!((a.len(), b.len()), (5, 5));
        assert_eq!(a.objectives, ds.objectives);
        assert!(split_by_time(&ds, 12).is_err());
    }

    #[test]
    fn coverage_counts_groups_with_labels() {
        let ds = tiny();
        assert_eq!(label_coverage(&ds, 0).unwrap(), 0.5);
        assert_eq!(label_coverage(&ds, 1).unwrap(), 0.5);
        assert_eq!(label_coverage(&ds.empty_like(), 0).unwrap(), 0.0);
        assert!(label_coverage(&ds, 2).is_err());
    }

    #[test]
    fn targets_respect_polarity() {
        let ds = tiny();
        assert_eq!(ds.hard_target(0).unwrap().as_slice(), &[0.0, 1.0, 0.0]);
        // cost objective: label 0 on item 1 means "not cancelled", a positive outcome
        assert_eq!(ds.objective_target(0, 1).unwrap().as_slice(), &[0.0, 1.0, 0.0]);
        assert!(ds.hard_target(1).is_none());
    }

    #[test]
    fn rejects_two_primary_positives() {
        let mut ds = tiny();
        ds.groups[0].labels[0][0] = Some(1);
        assert!(ds.validate().is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut ds = tiny();
        ds.groups[0].items[0].features.pop();
        assert!(ds.validate().is_err());
        let mut ds = tiny();
        ds.groups[0].labels[2][1] = Some(2);
        assert!(ds.validate().is_err());
        let mut ds = tiny();
        ds.objectives[1].primary = true;
        assert!(ds.validate().is_err());
    }
}
