use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::traces::{Label, TraceSet};

/// Per-prepared-class counts before and after post-selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostSelectStats {
    pub kept: Vec<usize>,
    pub total: Vec<usize>,
}

impl PostSelectStats {
    /// Kept fraction per class; an empty class reports 0.
    pub fn kept_fraction(&self) -> Vec<f64> {
        self.kept
            .iter()
            .zip(&self.total)
            .map(|(&k, &t)| if t == 0 { 0.0 } else { k as f64 / t as f64 })
            .collect()
    }
}

/// Keeps the records whose pre-measurement check found the ground state.
pub fn post_select(traces: &TraceSet) -> Result<(TraceSet, PostSelectStats)> {
    if !traces.has_initial_check() {
        return Err(Error::invalid("post-selection needs initial_check labels"));
    }
    let rows: Vec<usize> = (0..traces.n_traces)
        .filter(|&r| traces.initial_check[r] == Some(0))
        .collect();
    let kept = traces.subset(&rows);
    let stats = PostSelectStats {
        kept: kept.class_counts(),
        total: traces.class_counts(),
    };
    for (c, (&k, &t)) in stats.kept.iter().zip(&stats.total).enumerate() {
        if t > 0 && k == 0 {
            log::warn!("post-selection kept 0% of prepared class {c}");
        }
    }
    Ok((kept, stats))
}

/// Train / validation / test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.64,
            val: 0.16,
            test: 0.20,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::config("split", "ratios must be finite and >= 0"));
        }
        if self.train <= 0.0 {
            return Err(Error::config("split.train", "must be > 0"));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("split", "ratios must sum to 1"));
        }
        Ok(())
    }
}

/// Row indices of each part, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Training and validation rows together, ascending.
    pub fn fit_rows(&self) -> Vec<usize> {
        let mut rows = [self.train.as_slice(), self.val.as_slice()].concat();
        rows.sort_unstable();
        rows
    }
}

/// Floor allocation of `n` over `ratios` with the leftovers handed to the
/// largest fractional parts (earlier parts win ties).
pub fn allocate(n: usize, ratios: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let mut short = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..ratios.len()).filter(|&i| ratios[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if short == 0 {
            break;
        }
        counts[i] += 1;
        short -= 1;
    }
    counts
}

/// Rows grouped by label, each group shuffled by a stream keyed on the label.
fn shuffled_groups(labels: &[Label], seed: u64) -> Vec<(Label, Vec<usize>)> {
    let mut groups: Vec<(Label, Vec<usize>)> = Vec::new();
    let mut classes: Vec<Label> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    for c in classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == c).collect();
        rows.shuffle(&mut rng::stream(seed, c as u64));
        groups.push((c, rows));
    }
    groups
}

/// Stratified three-way split on the given labels.
pub fn stratified_split_labels(labels: &[Label], ratios: &SplitRatios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (c, rows) in shuffled_groups(labels, seed) {
        if rows.len() < 3 {
            return Err(Error::invalid(format!(
                "class {c} has {} records; a split needs at least 3",
                rows.len()
            )));
        }
        let n = allocate(rows.len(), &[ratios.train, ratios.val, ratios.test]);
        split.train.extend_from_slice(&rows[..n[0]]);
        split.val.extend_from_slice(&rows[n[0]..n[0] + n[1]]);
        split.test.extend_from_slice(&rows[n[0] + n[1]..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Stratified split of a trace set by prepared state.
pub fn stratified_split(
    traces: &TraceSet,
    ratios: &SplitRatios,
    seed: u64,
) -> Result<(TraceSet, TraceSet, TraceSet)> {
    let s = stratified_split_labels(&traces.prepared, ratios, seed)?;
    Ok((
        traces.subset(&s.train),
        traces.subset(&s.val),
        traces.subset(&s.test),
    ))
}

/// Fold index of every row for stratified k-fold cross-validation.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    let mut fold = vec![0usize; labels.len()];
    for (c, rows) in shuffled_groups(labels, seed) {
        if rows.len() < k {
            return Err(Error::invalid(format!(
                "class {c} has {} records, fewer than the {k} folds",
                rows.len()
            )));
        }
        for (i, r) in rows.into_iter().enumerate() {
            fold[r] = i % k;
        }
    }
    Ok(fold)
}
