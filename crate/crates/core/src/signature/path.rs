use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traces::TraceSet;

/// A piecewise-linear path starting at the origin.
///
/// Coordinates are (cumulative weighted I, cumulative weighted Q) with an
/// optional third coordinate holding normalized time in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dim: usize,
    points: Vec<f64>,
    time_augmented: bool,
}

impl Path {
    /// Path through the given points. The first point must be the origin.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a path needs at least two points"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::invalid(
                "path points must have at least one coordinate",
            ));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("path points must share one dimension"));
        }
        if points[0].iter().any(|&x| x != 0.0) {
            return Err(Error::invalid("a path must start at the origin"));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("path coordinates must be finite"));
        }
        Ok(Path {
            dim,
            points: points.concat(),
            time_augmented: false,
        })
    }

    /// Path from the origin through the running sums of `increments`.
    pub fn from_increments(dim: usize, increments: &[Vec<f64>]) -> Result<Self> {
        let mut acc = vec![0.0; dim];
        let mut points = vec![acc.clone()];
        for inc in increments {
            if inc.len() != dim {
                return Err(Error::invalid("increment dimension mismatch"));
            }
            for (a, &x) in acc.iter_mut().zip(inc) {
                *a += x;
            }
            points.push(acc.clone());
        }
        Path::from_points(points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_time_augmented(&self) -> bool {
        self.time_augmented
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.points.chunks_exact(self.dim)
    }

    pub fn increments(&self) -> Vec<Vec<f64>> {
        self.points()
            .zip(self.points().skip(1))
            .map(|(a, b)| b.iter().zip(a).map(|(y, x)| y - x).collect())
            .collect()
    }

    /// The same curve traversed backwards, translated to start at the origin.
    pub fn reversed(&self) -> Path {
        let last = self.point(self.len() - 1).to_vec();
        let points = self
            .points
            .chunks_exact(self.dim)
            .rev()
            .flat_map(|p| p.iter().zip(&last).map(|(x, l)| x - l).collect::<Vec<_>>())
            .collect();
        Path {
            dim: self.dim,
            points,
            time_augmented: false,
        }
    }
}

/// Per-sample nonnegative weights with unit mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    weights: Vec<f64>,
}

impl WeightProfile {
    pub fn uniform(n: usize) -> Self {
        WeightProfile {
            weights: vec![1.0; n],
        }
    }

    /// Rescales raw nonnegative weights to unit mean. Raw weights that are all
    /// negligible relative to `scale` give uniform weights.
    pub fn normalized(raw: Vec<f64>, scale: f64) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("weight profile must be nonempty"));
        }
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let floor = 1e-12 * scale;
        if raw.iter().all(|&w| w <= floor) {
            return Ok(WeightProfile::uniform(raw.len()));
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        Ok(WeightProfile {
            weights: raw.into_iter().map(|w| w / mean).collect(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Matched-envelope weights from the class mean traces: `|mean_b(t) - mean_a(t)|`
/// for two prepared classes, averaged over all class pairs otherwise.
pub fn compute_weights(traces: &TraceSet) -> Result<WeightProfile> {
    let n = traces.n_samples;
    let mut sums = vec![vec![Complex64::new(0.0, 0.0); n]; traces.n_states];
    let mut counts = vec![0usize; traces.n_states];
    for (trace, &label) in traces.iter_traces().zip(&traces.prepared) {
        counts[label as usize] += 1;
        for (acc, z) in sums[label as usize].iter_mut().zip(trace) {
            *acc += z;
        }
    }
    let means: Vec<Vec<Complex64>> = sums
        .into_iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| s.into_iter().map(|z| z / c as f64).collect())
        .collect();
    if means.len() < 2 {
        return Err(Error::invalid(format!(
            "weights need at least two prepared classes, found {}",
            means.len()
        )));
    }

    let mut raw = vec![0.0; n];
    let mut pairs = 0usize;
    for a in 0..means.len() {
        for b in a + 1..means.len() {
            pairs += 1;
            for (w, (x, y)) in raw.iter_mut().zip(means[a].iter().zip(&means[b])) {
                *w += (y - x).norm();
            }
        }
    }
    for w in &mut raw {
        *w /= pairs as f64;
    }
    let scale = means.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    WeightProfile::normalized(raw, scale)
}

/// Weighted cumulative path of one record: `P_k = sum_{j < k} w_j z_j`
/// (as (Re, Im)), with `k / n` appended when `time_augment` is set.
pub fn build_path(
    trace: &[Complex64],
    weights: &WeightProfile,
    time_augment: bool,
) -> Result<Path> {
    if trace.is_empty() {
        return Err(Error::invalid("cannot build a path from an empty trace"));
    }
    if trace.len() != weights.len() {
        return Err(Error::invalid(format!(
            "trace has {} samples but weight profile has {}",
            trace.len(),
            weights.len()
        )));
    }
    let n = trace.len();
    let dim = if time_augment { 3 } else { 2 };
    let mut points = Vec::with_capacity((n + 1) * dim);
    points.extend(std::iter::repeat_n(0.0, dim));
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, (z, &w)) in trace.iter().zip(weights.as_slice()).enumerate() {
        acc += z * w;
        points.push(acc.re);
        points.push(acc.im);
        if time_augment {
            points.push((k + 1) as f64 / n as f64);
        }
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("trace contains non-finite samples"));
    }
    Ok(Path {
        dim,
        points,
        time_augmented: time_augment,
    })
}

/// Endpoint displacement of the (I, Q) coordinates: the weighted integral.
pub fn integrated_feature(path: &Path) -> Complex64 {
    let first = path.point(0);
    let last = path.point(path.len() - 1);
    Complex64::new(last[0] - first[0], last[1] - first[1])
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn set(n: usize, traces: Vec<(u8, Vec<Complex64>)>) -> TraceSet {
        let prepared = traces.iter().map(|t| t.0).collect::<Vec<_>>();
        let k = prepared.len();
        TraceSet::new(
            n,
            3,
            1.0,
            traces.into_iter().flat_map(|t| t.1).collect(),
            prepared,
            vec![None; k],
            vec![None; k],
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn identical_means_fall_back_to_uniform() {
        let z = vec![c(1.0, 1.0); 4];
        let w = compute_weights(&set(4, vec![(0, z.clone()), (1, z)])).unwrap();
        assert_eq!(w.as_slice(), &[1.0; 4]);
    }

    #[test]
    fn constant_difference_normalizes_to_one() {
        let w = compute_weights(&set(
            4,
            vec![(0, vec![c(0.0, 0.0); 4]), (1, vec![c(0.3, -0.4); 4])],
        ))
        .unwrap();
        for &x in w.as_slice() {
            assert!((x - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn second_half_difference() {
        // raw = [0, 0, |c|, |c|], mean |c|/2 -> [0, 0, 2, 2]
        let w = compute_weights(&set(
            4,
            vec![
                (0, vec![c(0.0, 0.0); 4]),
                (1, vec![c(0.0, 0.0), c(0.0, 0.0), c(3.0, 4.0), c(3.0, 4.0)]),
            ],
        ))
        .unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn three_classes_average_pairwise_differences() {
        // pairs at t0: 1, 2, 1 -> raw [4/3, 0], unit mean -> [2, 0]
        let w = compute_weights(&set(
            2,
            vec![
                (0, vec![c(0.0, 0.0), c(0.0, 0.0)]),
                (1, vec![c(1.0, 0.0), c(0.0, 0.0)]),
                (2, vec![c(2.0, 0.0), c(0.0, 0.0)]),
            ],
        ))
        .unwrap();
        assert_eq!(w.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn one_class_is_an_error() {
        let z = vec![c(1.0, 0.0); 2];
        assert!(compute_weights(&set(2, vec![(1, z.clone()), (1, z)])).is_err());
    }

    #[test]
    fn build_path_cases() {
        let p = build_path(&[c(1.0, 2.0)], &WeightProfile::uniform(1), false).unwrap();
        assert_eq!(
            p.points().collect::<Vec<_>>(),
            vec![&[0.0, 0.0][..], &[1.0, 2.0]]
        );

        let w = WeightProfile::normalized(vec![2.0, 0.0], 1.0).unwrap();
        assert_eq!(w.as_slice(), &[2.0, 0.0]);
        let p = build_path(&[c(1.0, 0.0), c(1.0, 0.0)], &w, false).unwrap();
        assert_eq!(
            p.points().collect::<Vec<_>>(),
            vec![&[0.0, 0.0][..], &[2.0, 0.0], &[2.0, 0.0]]
        );

        let p = build_path(&[c(0.0, 0.0); 4], &WeightProfile::uniform(4), true).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.points().all(|q| q[0] == 0.0 && q[1] == 0.0));
        let times: Vec<f64> = p.points().map(|q| q[2]).collect();
        assert_eq!(times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn build_path_length_mismatch() {
        assert!(build_path(&[c(1.0, 0.0)], &WeightProfile::uniform(2), false).is_err());
    }

    #[test]
    fn integrated_feature_is_endpoint() {
        let p = Path::from_points(vec![vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(integrated_feature(&p), c(1.0, 2.0));
        let p = Path::from_points(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(integrated_feature(&p), c(2.0, 3.0));
        let closed = Path::from_points(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(integrated_feature(&closed), c(0.0, 0.0));
    }

    #[test]
    fn reversed_retraces() {
        let p = Path::from_points(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let r = p.reversed();
        assert_eq!(
            r.points().collect::<Vec<_>>(),
            vec![&[0.0, 0.0][..], &[0.0, -2.0], &[-1.0, -2.0]]
        );
    }
}
