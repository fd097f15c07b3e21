//! Multi-label classifiers: a one-hidden-layer MLP, one-vs-rest linear
//! SVM and Naive Bayes folded to a shared linear form, and ensembles over
//! any of them. All training is deterministic under a fixed seed and all
//! model families emit scores in [0, 1] so they can be averaged.

pub mod ensemble;
pub mod linear;
pub mod mlp;
pub mod store;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::smells::SmellClass;

pub use ensemble::{ensemble_predict, EnsembleModel, EnsembleRule};
pub use linear::{train_nb, train_svm_ovr, LabelPredictor, LinearHyper, LinearKind, LinearOvrModel, SvmHyper};
pub use mlp::{train_mlp, MlpHyper, MlpModel};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot_sparse(weights: &[f64], row: &[(usize, f64)]) -> f64 {
    row.iter().map(|&(c, v)| weights[c] * v).sum()
}

/// Per-instance scores and thresholded decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    /// Per row, per label, in [0, 1].
    pub scores: Vec<Vec<f64>>,
    pub decisions: Vec<Vec<bool>>,
    pub threshold: f64,
}

impl PredictionMatrix {
    pub fn from_scores(scores: Vec<Vec<f64>>, threshold: f64) -> Self {
        let decisions = scores
            .iter()
            .map(|row| row.iter().map(|&s| s >= threshold).collect())
            .collect();
        PredictionMatrix {
            scores,
            decisions,
            threshold,
        }
    }
}

/// Any trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Mlp(MlpModel),
    Linear(LinearOvrModel),
    Ensemble(EnsembleModel),
}

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::Mlp(m) => m.dims[0],
            Model::Linear(m) => m.n_features,
            Model::Ensemble(e) => e.members[0].n_features(),
        }
    }

    pub fn classes(&self) -> &[SmellClass] {
        match self {
            Model::Mlp(m) => &m.classes,
            Model::Linear(m) => &m.classes,
            Model::Ensemble(e) => e.members[0].classes(),
        }
    }

    /// Raw per-label scores in [0, 1]. Ensembles report the member mean.
    pub fn scores(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        if x.n_cols != self.n_features() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, matrix has {}",
                self.n_features(),
                x.n_cols
            )));
        }
        Ok(match self {
            Model::Mlp(m) => mlp::scores(m, x),
            Model::Linear(m) => linear::scores(m, x),
            Model::Ensemble(e) => ensemble::mean_scores(e, x)?,
        })
    }

    /// Score and threshold. Ensembles with the majority-vote rule derive
    /// decisions from member votes instead of the mean score.
    pub fn predict(&self, x: &FeatureMatrix, threshold: f64) -> Result<PredictionMatrix> {
        match self {
            Model::Ensemble(e) => ensemble_predict(e, x),
            _ => Ok(PredictionMatrix::from_scores(self.scores(x)?, threshold)),
        }
    }
}
