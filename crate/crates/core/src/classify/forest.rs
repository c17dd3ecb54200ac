use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, check_dim, check_rows, index_classes};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;
use crate::traces::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    /// Root is at depth 0; a node at `max_depth` is always a leaf.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        ForestHyperparams {
            n_trees: 100,
            max_depth: 20,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

impl ForestHyperparams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(field, reason))
            }
        };
        check(self.n_trees >= 1, "n_trees", "must be at least 1")?;
        check(self.max_depth >= 1, "max_depth", "must be at least 1")?;
        check(
            self.min_samples_split >= 2,
            "min_samples_split",
            "must be at least 2",
        )?;
        check(
            self.min_samples_leaf >= 1,
            "min_samples_leaf",
            "must be at least 1",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    /// Training-sample counts per class (model class order).
    Leaf { counts: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    fn leaf(&self, x: &[f64]) -> &[u32] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    } as usize
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Depth of the deepest leaf.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[u32]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts } => Some(counts.as_slice()),
            Node::Split { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub classes: Vec<Label>,
    pub n_features: usize,
    pub hyperparams: ForestHyperparams,
    pub seed: u64,
    pub trees: Vec<DecisionTree>,
}

/// Candidate features examined per node.
pub fn features_per_node(d: usize) -> usize {
    ((d as f64).sqrt().floor() as usize).clamp(1, d)
}

pub fn rf_fit(
    features: &FeatureMatrix,
    labels: &[Label],
    hyperparams: &ForestHyperparams,
    seed: u64,
) -> Result<ForestModel> {
    check_rows(features, labels)?;
    hyperparams.validate()?;
    let (classes, idx) = index_classes(labels);
    if classes.len() < 2 {
        return Err(Error::invalid("random forest needs at least two classes"));
    }
    let columns = features.columns();
    let trees = (0..hyperparams.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let n = features.n_rows;
            let sample: Vec<u32> = (0..n).map(|_| r.random_range(0..n as u32)).collect();
            TreeBuilder {
                columns: &columns,
                labels: &idx,
                n_classes: classes.len(),
                params: hyperparams,
                mtry: features_per_node(features.n_cols),
                rng: r,
                nodes: Vec::new(),
                buf: Vec::with_capacity(n),
            }
            .build(sample)
        })
        .collect();
    Ok(ForestModel {
        classes,
        n_features: features.n_cols,
        hyperparams: *hyperparams,
        seed,
        trees,
    })
}

struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    params: &'a ForestHyperparams,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    buf: Vec<(f64, u32)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl TreeBuilder<'_> {
    fn build(mut self, rows: Vec<u32>) -> DecisionTree {
        self.nodes.push(Node::Leaf { counts: Vec::new() });
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((slot, rows, depth)) = stack.pop() {
            let counts = self.class_counts(&rows);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let splittable = !pure
                && depth < self.params.max_depth
                && rows.len() >= self.params.min_samples_split
                && rows.len() >= 2 * self.params.min_samples_leaf;
            let split = if splittable {
                self.best_split(&rows, &counts)
            } else {
                None
            };
            match split {
                None => self.nodes[slot] = Node::Leaf { counts },
                Some(s) => {
                    let col = &self.columns[s.feature];
                    let (l, r): (Vec<u32>, Vec<u32>) =
                        rows.iter().partition(|&&i| col[i as usize] <= s.threshold);
                    let left = self.nodes.len();
                    self.nodes.push(Node::Leaf { counts: Vec::new() });
                    self.nodes.push(Node::Leaf { counts: Vec::new() });
                    self.nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: left as u32,
                        right: left as u32 + 1,
                    };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        DecisionTree { nodes: self.nodes }
    }

    fn class_counts(&self, rows: &[u32]) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_classes];
        for &i in rows {
            counts[self.labels[i as usize]] += 1;
        }
        counts
    }

    /// Best Gini split over a random subset of features.
    ///
    /// Features are visited in a random order until `mtry` non-constant ones
    /// have been scored, so constant columns do not use up the budget.
    fn best_split(&mut self, rows: &[u32], parent: &[u32]) -> Option<BestSplit> {
        let n = rows.len() as f64;
        // maximizing sum_c n_c^2 / n over both children minimizes weighted Gini
        let parent_score = parent.iter().map(|&c| (c as f64).powi(2)).sum::<f64>() / n;
        let d = self.columns.len();
        let mut order: Vec<usize> = (0..d).collect();
        let mut best: Option<BestSplit> = None;
        let mut scored = 0;
        let min_leaf = self.params.min_samples_leaf;
        let mut left = vec![0u32; self.n_classes];
        for k in 0..d {
            if scored >= self.mtry {
                break;
            }
            let j = self.rng.random_range(k..d);
            order.swap(k, j);
            let f = order[k];
            let col = &self.columns[f];
            self.buf.clear();
            self.buf.extend(
                rows.iter()
                    .map(|&i| (col[i as usize], self.labels[i as usize] as u32)),
            );
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.buf[0].0 == self.buf[self.buf.len() - 1].0 {
                continue;
            }
            scored += 1;
            left.iter_mut().for_each(|c| *c = 0);
            let mut sum_l = 0.0;
            let mut sum_r: f64 = parent.iter().map(|&c| (c as f64).powi(2)).sum();
            let m = self.buf.len();
            for pos in 0..m - 1 {
                let (value, class) = self.buf[pos];
                let c = class as usize;
                // incremental update of sum of squared counts on each side
                let cl = left[c] as f64;
                let cr = (parent[c] - left[c]) as f64;
                sum_l += 2.0 * cl + 1.0;
                sum_r -= 2.0 * cr - 1.0;
                left[c] += 1;
                let n_l = pos + 1;
                let next = self.buf[pos + 1].0;
                if value == next || n_l < min_leaf || m - n_l < min_leaf {
                    continue;
                }
                let score = sum_l / n_l as f64 + sum_r / (m - n_l) as f64;
                if score > parent_score + 1e-12 * n && best.as_ref().is_none_or(|b| score > b.score)
                {
                    let mid = 0.5 * (value + next);
                    let threshold = if mid < next { mid } else { value };
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

/// Labels and per-class probabilities (rows sum to one).
pub fn rf_predict(
    model: &ForestModel,
    features: &FeatureMatrix,
) -> Result<(Vec<Label>, FeatureMatrix)> {
    check_dim(features, model.n_features)?;
    let k = model.classes.len();
    let mut probs = FeatureMatrix::zeros(features.n_rows, k);
    probs
        .data
        .par_chunks_mut(k.max(1))
        .zip(features.data.par_chunks(features.n_cols.max(1)))
        .for_each(|(p, x)| {
            for tree in &model.trees {
                let counts = tree.leaf(x);
                let total: u32 = counts.iter().sum();
                for (pi, &c) in p.iter_mut().zip(counts) {
                    *pi += c as f64 / total as f64;
                }
            }
            let t = model.trees.len() as f64;
            p.iter_mut().for_each(|v| *v /= t);
        });
    let labels = probs.rows().map(|p| model.classes[argmax(p)]).collect();
    Ok((labels, probs))
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::classify::{accuracy, lda_fit, lda_predict};

    fn xor(n_per_blob: usize, seed: u64) -> (FeatureMatrix, Vec<Label>) {
        let mut r = rng::stream(seed, 0);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (cx, cy, label) in [
            (1.0, 1.0, 0),
            (-1.0, -1.0, 0),
            (1.0, -1.0, 1),
            (-1.0, 1.0, 1),
        ] {
            for _ in 0..n_per_blob {
                let a: f64 = StandardNormal.sample(&mut r);
                let b: f64 = StandardNormal.sample(&mut r);
                rows.push([cx + 0.3 * a, cy + 0.3 * b]);
                labels.push(label);
            }
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn xor_beats_linear() {
        let (x, y) = xor(200, 1);
        let (xt, yt) = xor(200, 2);
        let hp = ForestHyperparams {
            n_trees: 100,
            ..Default::default()
        };
        let m = rf_fit(&x, &y, &hp, 7).unwrap();
        let (pred, _) = rf_predict(&m, &xt).unwrap();
        let acc = accuracy(&pred, &yt);
        assert!(acc >= 0.95, "forest accuracy {acc}");
        let lda = lda_fit(&x, &y).unwrap();
        let lin = accuracy(&lda_predict(&lda, &xt).unwrap(), &yt);
        assert!((lin - 0.5).abs() < 0.15, "linear accuracy {lin}");
    }

    #[test]
    fn separable_training_accuracy() {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [i as f64, (i % 7) as f64]).collect();
        let y: Vec<Label> = (0..40).map(|i| if i < 20 { 3 } else { 5 }).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let m = rf_fit(&x, &y, &ForestHyperparams::default(), 0).unwrap();
        assert_eq!(rf_predict(&m, &x).unwrap().0, y);
    }

    #[test]
    fn deterministic_and_normalized() {
        let (x, y) = xor(50, 3);
        let hp = ForestHyperparams {
            n_trees: 20,
            max_depth: 10,
            min_samples_split: 5,
            min_samples_leaf: 4,
        };
        let a = rf_fit(&x, &y, &hp, 42).unwrap();
        let b = rf_fit(&x, &y, &hp, 42).unwrap();
        assert_eq!(a, b);
        let (q, _) = xor(30, 4);
        let (la, pa) = rf_predict(&a, &q).unwrap();
        assert_eq!(la, rf_predict(&b, &q).unwrap().0);
        for row in pa.rows() {
            assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for tree in &a.trees {
            assert!(tree.depth() <= hp.max_depth);
            assert!(tree
                .leaves()
                .all(|c| c.iter().sum::<u32>() >= hp.min_samples_leaf as u32));
        }
        let c = rf_fit(&x, &y, &hp, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_tree_pure_leaf() {
        let x = FeatureMatrix::from_rows(&[[0.0], [0.1], [5.0], [5.1]]).unwrap();
        let hp = ForestHyperparams {
            n_trees: 1,
            ..Default::default()
        };
        let m = rf_fit(&x, &[0, 0, 1, 1], &hp, 9).unwrap();
        let q = FeatureMatrix::from_rows(&[[-10.0], [10.0]]).unwrap();
        let (_, p) = rf_predict(&m, &q).unwrap();
        // a bootstrap may miss a class entirely, but any leaf reached is pure
        for row in p.rows() {
            assert!(row.contains(&1.0));
        }
    }

    #[test]
    fn errors() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(rf_fit(&x, &[1, 1], &ForestHyperparams::default(), 0).is_err());
        let m = rf_fit(&x, &[0, 1], &ForestHyperparams::default(), 0).unwrap();
        let q = FeatureMatrix::from_rows(&[[0.0, 1.0]]).unwrap();
        assert!(rf_predict(&m, &q).is_err());
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = xor(10, 5);
        let hp = ForestHyperparams {
            n_trees: 3,
            ..Default::default()
        };
        let m = rf_fit(&x, &y, &hp, 1).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: ForestModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
