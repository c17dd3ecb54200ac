use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::search::{random_search, SearchResult, SearchSpace};
use crate::classify::{gmm_fit, rf_fit, ClassifierModel, CovarianceMode, ForestHyperparams};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::signature::{batch_featurize, compute_weights, window_weights, WeightProfile};
use crate::traces::{Label, TraceSet};

/// Discriminator plus the features it consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Gaussian model on the weighted integral (a single I/Q point).
    Gmm,
    /// Random forest on the weighted record, `2 * window` features.
    Rf,
    /// Random forest on the truncated signature of the weighted path.
    SigRf,
    /// Predicts the prepared state; only meaningful for end-state targets.
    Baseline,
}

impl Method {
    pub const TRAINABLE: [Method; 3] = [Method::Gmm, Method::Rf, Method::SigRf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gmm => "gmm",
            Method::Rf => "rf",
            Method::SigRf => "sig_rf",
            Method::Baseline => "baseline",
        }
    }

    pub fn uses_forest(self) -> bool {
        matches!(self, Method::Rf | Method::SigRf)
    }
}

/// Which label the models learn to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The prepared state.
    #[default]
    Assignment,
    /// The state at the end of the readout window.
    Eom,
}

impl Target {
    pub fn labels(self, traces: &TraceSet) -> Result<Vec<Label>> {
        match self {
            Target::Assignment => Ok(traces.prepared.clone()),
            Target::Eom => traces.final_labels(),
        }
    }
}

/// Everything a method needs to turn records into features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub method: Method,
    /// Samples from the start of each record that are used.
    pub window: usize,
    pub sig_depth: usize,
    pub time_augment: bool,
    /// Full-length weight profile, learned from training records.
    pub weights: Vec<f64>,
}

impl FeatureSpec {
    /// Learns the weight profile from `fit_set`.
    pub fn learn(
        method: Method,
        fit_set: &TraceSet,
        window: usize,
        sig_depth: usize,
        time_augment: bool,
    ) -> Result<Self> {
        if method == Method::Baseline {
            return Err(Error::invalid("the baseline has no features"));
        }
        let weights = compute_weights(fit_set)?;
        Ok(FeatureSpec {
            method,
            window,
            sig_depth,
            time_augment,
            weights: weights.as_slice().to_vec(),
        })
    }

    pub fn featurize(&self, traces: &TraceSet) -> Result<FeatureMatrix> {
        if traces.n_samples != self.weights.len() {
            return Err(Error::invalid(format!(
                "records have {} samples, features were learned on {}",
                traces.n_samples,
                self.weights.len()
            )));
        }
        let full = WeightProfile::normalized(self.weights.clone(), 1.0)?;
        let w = window_weights(&full, self.window)?;
        let w = w.as_slice();
        match self.method {
            Method::Gmm => {
                let mut out = FeatureMatrix::zeros(traces.n_traces, 2);
                for (row, trace) in out.data.chunks_mut(2).zip(traces.iter_traces()) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (z, &wj) in trace.iter().zip(w) {
                        acc += z * wj;
                    }
                    row.copy_from_slice(&[acc.re, acc.im]);
                }
                Ok(out)
            }
            Method::Rf => {
                let n = self.window;
                let mut out = FeatureMatrix::zeros(traces.n_traces, 2 * n);
                for (row, trace) in out.data.chunks_mut(2 * n).zip(traces.iter_traces()) {
                    for (j, (z, &wj)) in trace.iter().zip(w).enumerate() {
                        row[2 * j] = z.re * wj;
                        row[2 * j + 1] = z.im * wj;
                    }
                }
                Ok(out)
            }
            Method::SigRf => batch_featurize(
                traces,
                &full,
                self.sig_depth,
                self.time_augment,
                self.window,
            ),
            Method::Baseline => Err(Error::invalid("the baseline has no features")),
        }
    }
}

/// Settings shared by every fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings<'a> {
    pub search: &'a SearchSpace,
    pub gmm_covariance: CovarianceMode,
    pub search_seed: u64,
    pub forest_seed: u64,
}

/// A fitted classifier with its feature recipe; what `model.json` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedMethod {
    pub n_states: usize,
    pub target: Target,
    pub features: FeatureSpec,
    pub model: ClassifierModel,
    pub hyperparams: Option<ForestHyperparams>,
    pub search: Option<SearchResult>,
}

impl TrainedMethod {
    pub fn predict(&self, traces: &TraceSet) -> Result<Vec<Label>> {
        self.model.predict(&self.features.featurize(traces)?)
    }
}

/// Fits a classifier on precomputed features.
///
/// Forest methods search hyperparameters by cross-validation on the
/// `search_rows` subset and refit the winner on every row.
pub fn fit_features(
    method: Method,
    features: &FeatureMatrix,
    labels: &[Label],
    search_rows: &[usize],
    settings: &FitSettings,
) -> Result<(
    ClassifierModel,
    Option<ForestHyperparams>,
    Option<SearchResult>,
)> {
    match method {
        Method::Gmm => Ok((
            ClassifierModel::Gmm(gmm_fit(features, labels, settings.gmm_covariance)?),
            None,
            None,
        )),
        Method::Rf | Method::SigRf => {
            let result = if settings.search.n_candidates == 1 {
                // a single draw wins regardless of its score
                None
            } else {
                let x = features.select_rows(search_rows);
                let y: Vec<Label> = search_rows.iter().map(|&r| labels[r]).collect();
                Some(random_search(
                    &x,
                    &y,
                    settings.search,
                    settings.search_seed,
                    settings.forest_seed,
                )?)
            };
            let hp = match &result {
                Some(r) => r.best,
                None => settings.search.draw(settings.search_seed)[0],
            };
            let model = rf_fit(features, labels, &hp, settings.forest_seed)?;
            Ok((ClassifierModel::Forest(model), Some(hp), result))
        }
        Method::Baseline => Err(Error::invalid("the baseline is not trainable")),
    }
}

/// Learns weights, featurizes and fits in one step. `search_rows` index into
/// `fit_set`.
#[allow(clippy::too_many_arguments)]
pub fn train_method(
    method: Method,
    fit_set: &TraceSet,
    target: Target,
    window: usize,
    sig_depth: usize,
    time_augment: bool,
    search_rows: &[usize],
    settings: &FitSettings,
) -> Result<TrainedMethod> {
    let spec = FeatureSpec::learn(method, fit_set, window, sig_depth, time_augment)?;
    let x = spec.featurize(fit_set)?;
    let y = target.labels(fit_set)?;
    let (model, hyperparams, search) = fit_features(method, &x, &y, search_rows, settings)?;
    Ok(TrainedMethod {
        n_states: fit_set.n_states,
        target,
        features: spec,
        model,
        hyperparams,
        search,
    })
}
