//! State discriminators: a per-class Gaussian model, a random forest, and
//! linear discriminant analysis.
//!
//! All three take labels as [`Label`]s and remember the sorted set of classes
//! they saw; ties in any argmax go to the lowest class.

mod forest;
mod gmm;
mod lda;

pub use forest::{rf_fit, rf_predict, DecisionTree, ForestHyperparams, ForestModel, Node};
pub use gmm::{gmm_fit, gmm_predict, CovarianceMode, GmmModel};
pub use lda::{lda_fit, lda_predict, lda_project, LdaModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::traces::Label;

/// Version of the JSON model documents.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Any trained discriminator, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    Gmm(GmmModel),
    Forest(ForestModel),
    Lda(LdaModel),
}

impl ClassifierModel {
    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<Label>> {
        match self {
            ClassifierModel::Gmm(m) => gmm_predict(m, features),
            ClassifierModel::Forest(m) => rf_predict(m, features).map(|(labels, _)| labels),
            ClassifierModel::Lda(m) => lda_predict(m, features),
        }
    }
}

/// Versioned wrapper written to `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument<T> {
    pub format_version: u32,
    pub model: T,
}

impl<T> ModelDocument<T> {
    pub fn new(model: T) -> Self {
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            model,
        }
    }

    pub fn check_version(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Unsupported {
                field: "format_version",
                value: self.format_version.to_string(),
            });
        }
        Ok(())
    }
}

/// Sorted distinct labels together with the per-row class index.
pub(crate) fn index_classes(labels: &[Label]) -> (Vec<Label>, Vec<usize>) {
    let mut classes: Vec<Label> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut lookup = [usize::MAX; 256];
    for (i, &c) in classes.iter().enumerate() {
        lookup[c as usize] = i;
    }
    let idx = labels.iter().map(|&l| lookup[l as usize]).collect();
    (classes, idx)
}

pub(crate) fn check_rows(features: &FeatureMatrix, labels: &[Label]) -> Result<()> {
    if features.n_rows != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} labels",
            features.n_rows,
            labels.len()
        )));
    }
    if features.n_rows == 0 || features.n_cols == 0 {
        return Err(Error::invalid("training data is empty"));
    }
    if features.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("features must be finite"));
    }
    Ok(())
}

pub(crate) fn check_dim(features: &FeatureMatrix, expected: usize) -> Result<()> {
    if features.n_cols != expected {
        return Err(Error::invalid(format!(
            "model expects {expected} features, got {}",
            features.n_cols
        )));
    }
    Ok(())
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Fraction of matching labels.
pub fn accuracy(pred: &[Label], truth: &[Label]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}
