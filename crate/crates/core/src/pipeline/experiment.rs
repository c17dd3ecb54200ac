use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::method::{fit_features, FeatureSpec, FitSettings, Method, Target, TrainedMethod};
use super::search::SearchSpace;
use super::split::{post_select, stratified_split_labels, PostSelectStats, Split, SplitRatios};
use crate::classify::{CovarianceMode, ForestHyperparams};
use crate::config::deserialize_sim_config;
use crate::error::{Error, Result};
use crate::metrics::{confusion, eom_confusion, ConfusionMatrix, FidelityReport};
use crate::rng::derive_seed;
use crate::sim::{simulate_traces, SimConfig};
use crate::traces::TraceSet;

/// Where the records of each repetition come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Fresh records every repetition. The simulator seed is combined with the
    /// repetition seed.
    Simulator {
        #[serde(deserialize_with = "deserialize_sim_config")]
        config: SimConfig,
        n_per_state: usize,
    },
    /// The same stored records every repetition; only splits and model seeds vary.
    Bundle { path: PathBuf },
}

fn default_methods() -> Vec<Method> {
    Method::TRAINABLE.to_vec()
}
fn default_depth() -> usize {
    5
}
fn default_reps() -> usize {
    10
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_depth")]
    pub sig_depth: usize,
    #[serde(default = "yes")]
    pub time_augment: bool,
    /// Samples used per record; the full record when absent.
    #[serde(default)]
    pub window: Option<usize>,
    /// Window lengths for sweeps, ascending.
    #[serde(default)]
    pub windows: Vec<usize>,
    #[serde(default)]
    pub split: SplitRatios,
    #[serde(default = "default_reps")]
    pub n_repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub search: SearchSpace,
    #[serde(default)]
    pub target: Target,
    /// Drop records whose pre-measurement check is not the ground state.
    #[serde(default = "yes")]
    pub post_select: bool,
    #[serde(default)]
    pub gmm_covariance: CovarianceMode,
}

impl ExperimentConfig {
    pub fn new(data: DataSource) -> Self {
        ExperimentConfig {
            data,
            methods: default_methods(),
            sig_depth: default_depth(),
            time_augment: true,
            window: None,
            windows: Vec::new(),
            split: SplitRatios::default(),
            n_repetitions: default_reps(),
            seed: 0,
            search: SearchSpace::default(),
            target: Target::Assignment,
            post_select: true,
            gmm_covariance: CovarianceMode::Spherical,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_repetitions == 0 {
            return Err(Error::config("n_repetitions", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "list at least one method"));
        }
        if self.methods.contains(&Method::Baseline) {
            return Err(Error::config(
                "methods",
                "baseline is reported automatically for eom targets",
            ));
        }
        if self.sig_depth == 0 {
            return Err(Error::config("sig_depth", "must be at least 1"));
        }
        if let DataSource::Simulator {
            config,
            n_per_state,
        } = &self.data
        {
            config.validate()?;
            if *n_per_state == 0 {
                return Err(Error::config("n_per_state", "must be at least 1"));
            }
        }
        self.split.validate()?;
        self.search.validate()
    }

    fn load_rep_data(&self, rep_seed: u64) -> Result<TraceSet> {
        match &self.data {
            DataSource::Simulator {
                config,
                n_per_state,
            } => {
                let mut cfg = config.clone();
                cfg.seed = derive_seed(rep_seed, config.seed);
                simulate_traces(&cfg, *n_per_state)
            }
            DataSource::Bundle { path } => crate::io::load_bundle(path),
        }
    }
}

/// Fidelity of one method at one window, aggregated over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub window: usize,
    pub method: Method,
    pub fidelity: FidelityReport,
    /// Infidelity of every repetition, in repetition order.
    pub per_rep_infidelity: Vec<f64>,
    /// Forest hyperparameters chosen in each repetition.
    pub hyperparams: Vec<ForestHyperparams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub target: Target,
    pub n_reps: usize,
    pub windows: Vec<usize>,
    pub post_selection: Vec<PostSelectStats>,
    /// Ordered by window, then method.
    pub results: Vec<MethodResult>,
}

impl ExperimentReport {
    pub fn result(&self, window: usize, method: Method) -> Option<&MethodResult> {
        self.results
            .iter()
            .find(|r| r.window == window && r.method == method)
    }

    /// Mean infidelity per window for one method.
    pub fn curve(&self, method: Method) -> Vec<(usize, f64, f64)> {
        self.results
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.window, r.fidelity.mean, r.fidelity.std))
            .collect()
    }

    /// The method's lowest mean infidelity across the swept windows.
    pub fn best_window(&self, method: Method) -> Option<&MethodResult> {
        self.results
            .iter()
            .filter(|r| r.method == method)
            .min_by(|a, b| a.fidelity.mean.total_cmp(&b.fidelity.mean))
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.results.iter().map(|r| r.method).collect();
        m.sort_unstable();
        m.dedup();
        m
    }

    /// Text table of each method's best window: infidelity in units of 1e-2.
    pub fn render_table(&self) -> String {
        let title = match self.target {
            Target::Assignment => "assignment infidelity",
            Target::Eom => "end-of-measurement infidelity",
        };
        let mut out = String::new();
        let _ = writeln!(out, "{title} (x1e-2), {} repetition(s)", self.n_reps);
        let _ = writeln!(
            out,
            "{:<10} {:>8} {:>18} per-class",
            "method", "window", "mean +/- std"
        );
        for m in self.methods() {
            let Some(r) = self.best_window(m) else {
                continue;
            };
            let per_class: Vec<String> = r
                .fidelity
                .per_class_infidelity
                .iter()
                .map(|v| format!("{:.2}", 100.0 * v))
                .collect();
            let _ = writeln!(
                out,
                "{:<10} {:>8} {:>18} [{}]",
                m.name(),
                r.window,
                format!(
                    "{:.2} +/- {:.2}",
                    100.0 * r.fidelity.mean,
                    100.0 * r.fidelity.std
                ),
                per_class.join(", ")
            );
        }
        out
    }
}

/// Stream tags under the per-repetition seed.
const TAG_SPLIT: u64 = 1;
const TAG_SEARCH: u64 = 2;
const TAG_FOREST: u64 = 3;

/// Methods in report order; the baseline joins for end-state targets.
fn reported_methods(config: &ExperimentConfig) -> Vec<Method> {
    let mut methods = config.methods.clone();
    methods.sort_unstable();
    methods.dedup();
    if config.target == Target::Eom {
        methods.push(Method::Baseline);
    }
    methods
}

/// Models of one repetition, before any test record is looked at.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionFit {
    pub split: Split,
    /// `(window, method)` per cell, window-major.
    pub cells: Vec<(usize, Method)>,
    /// `None` for the baseline.
    pub models: Vec<Option<TrainedMethod>>,
}

/// Splits `data` and fits every method at every window on the training and
/// validation records. Forest hyperparameters are searched on the training
/// part only. All methods share search and forest seeds, so forest methods
/// are compared on the same hyperparameter draws.
pub fn fit_repetition(
    config: &ExperimentConfig,
    data: &TraceSet,
    rep_seed: u64,
    windows: &[usize],
) -> Result<RepetitionFit> {
    if let Some(&w) = windows.last() {
        if w > data.n_samples {
            return Err(Error::config(
                "windows",
                format!("window {w} exceeds the record length {}", data.n_samples),
            ));
        }
    }
    let split = stratified_split_labels(
        &data.prepared,
        &config.split,
        derive_seed(rep_seed, TAG_SPLIT),
    )?;
    if split.test.is_empty() {
        return Err(Error::config("split.test", "the test split is empty"));
    }
    let fit_rows = split.fit_rows();
    let fit_set = data.subset(&fit_rows);
    let fit_labels = config.target.labels(&fit_set)?;
    // training rows, as positions inside the fit set
    let search_rows: Vec<usize> = fit_rows
        .iter()
        .enumerate()
        .filter(|(_, r)| split.train.binary_search(r).is_ok())
        .map(|(i, _)| i)
        .collect();
    let settings = FitSettings {
        search: &config.search,
        gmm_covariance: config.gmm_covariance,
        search_seed: derive_seed(rep_seed, TAG_SEARCH),
        forest_seed: derive_seed(rep_seed, TAG_FOREST),
    };

    let mut cells = Vec::new();
    let mut models = Vec::new();
    for &window in windows {
        for method in reported_methods(config) {
            cells.push((window, method));
            if method == Method::Baseline {
                models.push(None);
                continue;
            }
            let spec = FeatureSpec::learn(
                method,
                &fit_set,
                window,
                config.sig_depth,
                config.time_augment,
            )?;
            let x = spec.featurize(&fit_set)?;
            let (model, hyperparams, search) =
                fit_features(method, &x, &fit_labels, &search_rows, &settings)?;
            models.push(Some(TrainedMethod {
                n_states: data.n_states,
                target: config.target,
                features: spec,
                model,
                hyperparams,
                search,
            }));
        }
    }
    Ok(RepetitionFit {
        split,
        cells,
        models,
    })
}

/// Runs the protocol at the configured window (or the full record).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    match config.window {
        Some(w) => window_sweep(config, &[w]),
        None => {
            let n = match &config.data {
                DataSource::Simulator { config, .. } => config.n_samples(),
                DataSource::Bundle { path } => crate::io::load_bundle(path)?.n_samples,
            };
            window_sweep(config, &[n])
        }
    }
}

/// Runs the protocol once per window. Data, post-selection, splits and
/// weight profiles are shared across windows within a repetition.
pub fn window_sweep(config: &ExperimentConfig, windows: &[usize]) -> Result<ExperimentReport> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::config("windows", "list at least one window"));
    }
    if windows.windows(2).any(|w| w[0] > w[1]) || windows[0] == 0 {
        return Err(Error::config("windows", "must be positive and ascending"));
    }
    let methods = reported_methods(config);
    let cells = windows.len() * methods.len();
    let mut confusions: Vec<Vec<ConfusionMatrix>> = vec![Vec::new(); cells];
    let mut chosen: Vec<Vec<ForestHyperparams>> = vec![Vec::new(); cells];
    let mut post_selection = Vec::new();

    for rep in 0..config.n_repetitions {
        let rep_seed = derive_seed(config.seed, rep as u64);
        let mut data = config.load_rep_data(rep_seed)?;
        if config.post_select {
            let (kept, stats) = post_select(&data)?;
            post_selection.push(stats);
            data = kept;
        }
        let fit = fit_repetition(config, &data, rep_seed, windows)?;
        let test_set = data.subset(&fit.split.test);
        let test_labels = config.target.labels(&test_set)?;
        for (cell, (window, method)) in fit.cells.iter().copied().enumerate() {
            let pred = match &fit.models[cell] {
                None => test_set.prepared.clone(),
                Some(m) => {
                    if let Some(hp) = m.hyperparams {
                        chosen[cell].push(hp);
                    }
                    m.predict(&test_set)?
                }
            };
            let cm = match config.target {
                Target::Assignment => confusion(&pred, &test_labels, data.n_states)?,
                Target::Eom => eom_confusion(&pred, &test_labels, data.n_states)?,
            };
            log::info!(
                "rep {rep} window {window} {}: infidelity {:.4}",
                method.name(),
                1.0 - crate::metrics::assignment_fidelity(&cm)?
            );
            confusions[cell].push(cm);
        }
    }

    let mut results = Vec::with_capacity(cells);
    for (wi, &window) in windows.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            let cell = wi * methods.len() + mi;
            let fidelity =
                FidelityReport::from_reps(&confusions[cell], config.target == Target::Eom)?;
            let per_rep_infidelity = confusions[cell]
                .iter()
                .map(|c| crate::metrics::assignment_fidelity(c).map(|f| 1.0 - f))
                .collect::<Result<_>>()?;
            results.push(MethodResult {
                window,
                method,
                fidelity,
                per_rep_infidelity,
                hyperparams: std::mem::take(&mut chosen[cell]),
            });
        }
    }
    Ok(ExperimentReport {
        target: config.target,
        n_reps: config.n_repetitions,
        windows: windows.to_vec(),
        post_selection,
        results,
    })
}
