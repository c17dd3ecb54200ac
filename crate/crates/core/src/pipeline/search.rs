use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::split::stratified_folds;
use crate::classify::{accuracy, rf_fit, rf_predict, ForestHyperparams};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;
use crate::traces::Label;

/// Grid that randomized search draws forest hyperparameters from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub n_candidates: usize,
    pub k_folds: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            n_trees: (50..=150).step_by(10).collect(),
            max_depth: vec![10, 20, 30],
            min_samples_split: vec![2, 5, 10],
            min_samples_leaf: vec![1, 2, 4],
            n_candidates: 20,
            k_folds: 5,
        }
    }
}

impl SearchSpace {
    /// A space holding exactly one configuration.
    pub fn fixed(hp: ForestHyperparams) -> Self {
        SearchSpace {
            n_trees: vec![hp.n_trees],
            max_depth: vec![hp.max_depth],
            min_samples_split: vec![hp.min_samples_split],
            min_samples_leaf: vec![hp.min_samples_leaf],
            n_candidates: 1,
            ..Default::default()
        }
    }

    pub fn grid_size(&self) -> usize {
        self.n_trees.len()
            * self.max_depth.len()
            * self.min_samples_split.len()
            * self.min_samples_leaf.len()
    }

    /// Grid point `i` in row-major order over the four axes.
    pub fn grid_point(&self, mut i: usize) -> ForestHyperparams {
        let mut take = |axis: &[usize]| {
            let v = axis[i % axis.len()];
            i /= axis.len();
            v
        };
        let min_samples_leaf = take(&self.min_samples_leaf);
        let min_samples_split = take(&self.min_samples_split);
        let max_depth = take(&self.max_depth);
        let n_trees = take(&self.n_trees);
        ForestHyperparams {
            n_trees,
            max_depth,
            min_samples_split,
            min_samples_leaf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size() == 0 {
            return Err(Error::config(
                "search",
                "every axis needs at least one value",
            ));
        }
        if self.n_candidates == 0 {
            return Err(Error::config("search.n_candidates", "must be at least 1"));
        }
        if self.k_folds < 2 {
            return Err(Error::config("search.k_folds", "must be at least 2"));
        }
        for i in 0..self.grid_size() {
            self.grid_point(i).validate()?;
        }
        Ok(())
    }

    /// Distinct grid points in draw order; at most the whole grid.
    pub fn draw(&self, seed: u64) -> Vec<ForestHyperparams> {
        let n = self.grid_size();
        let mut r = rng::stream(seed, u64::MAX);
        index::sample(&mut r, n, self.n_candidates.min(n))
            .into_iter()
            .map(|i| self.grid_point(i))
            .collect()
    }
}

/// One scored draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub hyperparams: ForestHyperparams,
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: ForestHyperparams,
    pub best_accuracy: f64,
    pub candidates: Vec<Candidate>,
}

/// Randomized search scored by mean stratified k-fold accuracy.
///
/// Folds come from the stream `(seed, class)`, draws from a separate stream,
/// and every forest is seeded with `forest_seed`. Ties keep the earliest draw.
pub fn random_search(
    features: &FeatureMatrix,
    labels: &[Label],
    space: &SearchSpace,
    seed: u64,
    forest_seed: u64,
) -> Result<SearchResult> {
    space.validate()?;
    if features.n_rows != labels.len() {
        return Err(Error::invalid("feature rows and labels differ in length"));
    }
    let folds = stratified_folds(labels, space.k_folds, seed)?;
    let draws = space.draw(seed);
    let fold_data: Vec<_> = (0..space.k_folds)
        .map(|k| {
            let train: Vec<usize> = (0..labels.len()).filter(|&r| folds[r] != k).collect();
            let held: Vec<usize> = (0..labels.len()).filter(|&r| folds[r] == k).collect();
            let y_train: Vec<Label> = train.iter().map(|&r| labels[r]).collect();
            let y_held: Vec<Label> = held.iter().map(|&r| labels[r]).collect();
            (
                features.select_rows(&train),
                y_train,
                features.select_rows(&held),
                y_held,
            )
        })
        .collect();

    let mut candidates = Vec::with_capacity(draws.len());
    for hp in draws {
        let mut total = 0.0;
        for (x, y, xh, yh) in &fold_data {
            let model = rf_fit(x, y, &hp, forest_seed)?;
            total += accuracy(&rf_predict(&model, xh)?.0, yh);
        }
        let cv_accuracy = total / space.k_folds as f64;
        log::debug!("candidate {hp:?}: cv accuracy {cv_accuracy:.4}");
        candidates.push(Candidate {
            hyperparams: hp,
            cv_accuracy,
        });
    }
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.cv_accuracy > candidates[best].cv_accuracy {
            best = i;
        }
    }
    Ok(SearchResult {
        best: candidates[best].hyperparams,
        best_accuracy: candidates[best].cv_accuracy,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    #[test]
    fn default_grid() {
        let s = SearchSpace::default();
        assert_eq!(s.grid_size(), 297);
        let all: std::collections::BTreeSet<_> = (0..297)
            .map(|i| s.grid_point(i))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|h| {
                (
                    h.n_trees,
                    h.max_depth,
                    h.min_samples_split,
                    h.min_samples_leaf,
                )
            })
            .collect();
        assert_eq!(all.len(), 297);
        let d = s.draw(3);
        assert_eq!(d.len(), 20);
        for hp in &d {
            assert!(s.n_trees.contains(&hp.n_trees));
            assert!(s.max_depth.contains(&hp.max_depth));
            assert!(s.min_samples_split.contains(&hp.min_samples_split));
            assert!(s.min_samples_leaf.contains(&hp.min_samples_leaf));
        }
        let distinct: std::collections::BTreeSet<_> = d
            .iter()
            .map(|h| {
                (
                    h.n_trees,
                    h.max_depth,
                    h.min_samples_split,
                    h.min_samples_leaf,
                )
            })
            .collect();
        assert_eq!(distinct.len(), 20);
    }

    fn blobs(xor: bool, n: usize, seed: u64) -> (FeatureMatrix, Vec<Label>) {
        let mut r = rng::stream(seed, 0);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (cx, cy, a, b) in [
            (1.0, 1.0, 0, 0),
            (-1.0, -1.0, 0, 1),
            (1.0, -1.0, 1, 1),
            (-1.0, 1.0, 1, 0),
        ] {
            for _ in 0..n {
                let s = if xor { 0.3 } else { 0.05 };
                let e: f64 = StandardNormal.sample(&mut r);
                let f: f64 = StandardNormal.sample(&mut r);
                rows.push([cx + s * e, cy + s * f]);
                labels.push(if xor { a } else { b });
            }
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), labels)
    }

    fn small_space(n_candidates: usize) -> SearchSpace {
        SearchSpace {
            n_trees: vec![10, 20],
            n_candidates,
            ..Default::default()
        }
    }

    #[test]
    fn single_candidate() {
        let (x, y) = blobs(true, 20, 1);
        let space = small_space(1);
        let r = random_search(&x, &y, &space, 9, 1).unwrap();
        assert_eq!(r.candidates.len(), 1);
        assert_eq!(r.best, space.draw(9)[0]);
    }

    #[test]
    fn separable_ties_pick_the_first_draw() {
        let (x, y) = blobs(false, 20, 2);
        let space = small_space(4);
        let r = random_search(&x, &y, &space, 4, 1).unwrap();
        assert!(r.candidates.iter().all(|c| c.cv_accuracy == 1.0));
        assert_eq!(r.best, r.candidates[0].hyperparams);
    }

    #[test]
    fn xor_cv_accuracy() {
        let (x, y) = blobs(true, 50, 3);
        let r = random_search(&x, &y, &small_space(3), 5, 2).unwrap();
        assert!(r.best_accuracy >= 0.9, "{}", r.best_accuracy);
    }

    #[test]
    fn too_few_rows_per_fold() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]]).unwrap();
        assert!(random_search(&x, &[0, 0, 0, 1, 1, 1], &small_space(1), 0, 0).is_err());
    }
}
