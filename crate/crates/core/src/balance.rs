//! Multi-label SMOTE oversampling.
//!
//! For each label whose positive count falls short of
//! `target_ratio * max label count`, synthetic rows are interpolated
//! between a random positive seed row and one of its k nearest positive
//! neighbors. The synthetic label set follows the MLSMOTE ranking rule:
//! a label is assigned when at least half of the seed-plus-neighborhood
//! group carries it. Original rows always survive verbatim as the output
//! prefix, and synthetic rows are not re-normalized, so downstream code
//! must not assume unit L2 rows after resampling.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng::label_rng;
use crate::smells::{LabelMatrix, SmellClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Minority labels are raised to at least this fraction of the
    /// largest label count.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 0.5,
            seed: 0,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors < 1 {
            return Err(Error::InvalidArgument(
                "k_neighbors must be >= 1".to_string(),
            ));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "target_ratio must be in (0, 1], got {}",
                self.target_ratio
            )));
        }
        Ok(())
    }
}

/// Per-label before/after bookkeeping for the augmentation report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAugmentation {
    pub before: usize,
    pub after: usize,
    pub synthetic_added: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_reason: Option<String>,
}

/// Which rows produced a synthetic row, and with what interpolation
/// factor. Kept for auditability and segment-property checks; not part
/// of the JSON report.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProvenance {
    /// Index of the synthetic row in the augmented matrix.
    pub row: usize,
    pub seed_row: usize,
    pub neighbor_row: usize,
    pub u: f64,
    pub label: SmellClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteReport {
    pub labels: BTreeMap<SmellClass, LabelAugmentation>,
    pub synthetics: Vec<SyntheticProvenance>,
}

impl SmoteReport {
    /// The exported JSON shape: label name → augmentation summary.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.labels).expect("report serializes")
    }
}

/// Linear interpolation `seed + u * (neighbor - seed)` over dense rows.
pub fn interpolate(seed: &[f64], neighbor: &[f64], u: f64) -> Vec<f64> {
    seed.iter()
        .zip(neighbor)
        .map(|(&s, &n)| s + u * (n - s))
        .collect()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Oversample minority labels. Original rows are preserved bit-for-bit
/// as the output prefix; each deficient label appends its synthetics in
/// label column order, drawing randomness from a per-label sub-stream.
pub fn smote(
    x: &FeatureMatrix,
    y: &LabelMatrix,
    config: &SmoteConfig,
) -> Result<(FeatureMatrix, LabelMatrix, SmoteReport)> {
    config.validate()?;
    if x.n_rows() != y.n_rows() {
        return Err(Error::ShapeMismatch(format!(
            "feature rows {} vs label rows {}",
            x.n_rows(),
            y.n_rows()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::InvalidArgument(
            "resampling needs at least 2 rows".to_string(),
        ));
    }

    let n_labels = y.n_labels();
    let before: Vec<usize> = (0..n_labels).map(|l| y.count_positive(l)).collect();
    let max_count = before.iter().copied().max().unwrap_or(0);
    let target = (config.target_ratio * max_count as f64).ceil() as usize;

    let mut aug_x = x.clone();
    let mut aug_y = y.clone();
    let mut report = SmoteReport {
        labels: BTreeMap::new(),
        synthetics: Vec::new(),
    };
    let mut skipped: BTreeMap<SmellClass, String> = BTreeMap::new();

    for label in 0..n_labels {
        let class = y.classes()[label];
        if before[label] >= target {
            continue;
        }
        if before[label] == 0 {
            skipped.insert(class, "no positive rows".to_string());
            continue;
        }
        if before[label] == 1 {
            skipped.insert(class, "single positive row, no neighbor exists".to_string());
            continue;
        }

        // Candidates come from the original rows only.
        let positives: Vec<usize> = (0..y.n_rows()).filter(|&r| y.get(r, label)).collect();
        let dense: Vec<Vec<f64>> = positives.iter().map(|&r| x.row_dense(r)).collect();

        // k nearest positive neighbors per positive row; ties break on
        // the lower original row index.
        let neighborhoods: Vec<Vec<usize>> = (0..positives.len())
            .map(|i| {
                let mut others: Vec<(f64, usize)> = (0..positives.len())
                    .filter(|&j| j != i)
                    .map(|j| (euclidean(&dense[i], &dense[j]), j))
                    .collect();
                others.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .unwrap()
                        .then_with(|| positives[a.1].cmp(&positives[b.1]))
                });
                others
                    .into_iter()
                    .take(config.k_neighbors)
                    .map(|(_, j)| j)
                    .collect()
            })
            .collect();

        let mut rng = label_rng(config.seed, label);
        let needed = target - before[label];
        for seq in 0..needed {
            let seed_idx = rng.gen_range(0..positives.len());
            let hood = &neighborhoods[seed_idx];
            let neighbor_idx = hood[rng.gen_range(0..hood.len())];
            let u: f64 = rng.gen();

            let values = interpolate(&dense[seed_idx], &dense[neighbor_idx], u);
            let sparse: Vec<(usize, f64)> = values
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w != 0.0)
                .map(|(c, &w)| (c, w))
                .collect();

            // MLSMOTE label ranking over {seed} ∪ neighborhood.
            let group: Vec<usize> = std::iter::once(positives[seed_idx])
                .chain(hood.iter().map(|&j| positives[j]))
                .collect();
            let labels_row: Vec<bool> = (0..n_labels)
                .map(|m| {
                    let votes = group.iter().filter(|&&r| y.get(r, m)).count();
                    2 * votes >= group.len()
                })
                .collect();

            report.synthetics.push(SyntheticProvenance {
                row: aug_x.n_rows(),
                seed_row: positives[seed_idx],
                neighbor_row: positives[neighbor_idx],
                u,
                label: class,
            });
            aug_x.ids.push(format!("smote:{}:{}", class.file_stem(), seq));
            aug_x.rows.push(sparse);
            aug_y.push_row(labels_row);
        }
    }

    for label in 0..n_labels {
        let class = y.classes()[label];
        let after = aug_y.count_positive(label);
        report.labels.insert(
            class,
            LabelAugmentation {
                before: before[label],
                after,
                synthetic_added: after - before[label],
                skipped_reason: skipped.get(&class).cloned(),
            },
        );
    }

    Ok((aug_x, aug_y, report))
}
