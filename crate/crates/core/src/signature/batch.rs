use rayon::prelude::*;

use super::{build_path, sig_dim, signature, WeightProfile};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::traces::TraceSet;

/// The first `window` weights, rescaled to unit mean over the window.
pub fn window_weights(weights: &WeightProfile, window: usize) -> Result<WeightProfile> {
    if window == 0 || window > weights.len() {
        return Err(Error::invalid(format!(
            "window {window} outside 1..={}",
            weights.len()
        )));
    }
    let head = weights.as_slice()[..window].to_vec();
    let scale = weights.as_slice().iter().fold(0.0, |m: f64, &w| m.max(w));
    WeightProfile::normalized(head, scale)
}

/// Signature features of every trace's first `window` samples, one row per trace.
pub fn batch_featurize(
    traces: &TraceSet,
    weights: &WeightProfile,
    depth: usize,
    time_augment: bool,
    window: usize,
) -> Result<FeatureMatrix> {
    if traces.is_empty() {
        return Err(Error::invalid("cannot featurize an empty trace set"));
    }
    if depth == 0 {
        return Err(Error::invalid("signature depth must be at least 1"));
    }
    if weights.len() != traces.n_samples {
        return Err(Error::invalid(format!(
            "weight profile has {} samples, traces have {}",
            weights.len(),
            traces.n_samples
        )));
    }
    if window == 0 || window > traces.n_samples {
        return Err(Error::invalid(format!(
            "window {window} outside 1..={}",
            traces.n_samples
        )));
    }
    let w = window_weights(weights, window)?;
    let dim = if time_augment { 3 } else { 2 };
    let mut out = FeatureMatrix::zeros(traces.n_traces, sig_dim(dim, depth));
    out.data
        .par_chunks_mut(out.n_cols)
        .enumerate()
        .try_for_each(|(r, row)| -> Result<()> {
            let path = build_path(&traces.trace(r)[..window], &w, time_augment)?;
            row.copy_from_slice(signature(&path, depth).coeffs());
            Ok(())
        })?;
    Ok(out)
}
