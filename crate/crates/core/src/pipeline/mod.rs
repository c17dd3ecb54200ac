//! The evaluation protocol: post-selection, stratified splits, randomized
//! hyperparameter search, repeated runs and window sweeps.

mod experiment;
mod method;
mod search;
mod split;

pub use experiment::{
    fit_repetition, run_experiment, window_sweep, DataSource, ExperimentConfig, ExperimentReport,
    MethodResult, RepetitionFit,
};
pub use method::{
    fit_features, train_method, FeatureSpec, FitSettings, Method, Target, TrainedMethod,
};
pub use search::{random_search, Candidate, SearchResult, SearchSpace};
pub use split::{
    allocate, post_select, stratified_folds, stratified_split, stratified_split_labels,
    PostSelectStats, Split, SplitRatios,
};
