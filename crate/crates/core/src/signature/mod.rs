//! Truncated path signatures of piecewise-linear paths.
//!
//! Coefficients are stored flat, degree by degree, words in lexicographic
//! order within a degree. Letters are 0-based in this API, so for a path in
//! R^d the word `(i_1, ..., i_k)` of degree `k` sits at
//!
//! ```text
//! offset(k) + sum_r i_r * d^(k - r),    offset(k) = d + d^2 + ... + d^(k-1)
//! ```
//!
//! The degree-0 term is always 1 and is not stored.

mod batch;
mod path;

pub use batch::{batch_featurize, window_weights};
pub use path::{build_path, compute_weights, integrated_feature, Path, WeightProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of stored coefficients of a depth-`depth` signature over `dim` letters.
pub fn sig_dim(dim: usize, depth: usize) -> usize {
    (1..=depth).map(|k| dim.pow(k as u32)).sum()
}

/// Truncated signature coefficients (degree 0 omitted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    dim: usize,
    depth: usize,
    coeffs: Vec<f64>,
}

impl Signature {
    /// Signature of a constant path: the identity for [`Signature::concat`].
    pub fn zero(dim: usize, depth: usize) -> Self {
        assert!(
            dim >= 1 && depth >= 1,
            "signature needs dim >= 1 and depth >= 1"
        );
        Signature {
            dim,
            depth,
            coeffs: vec![0.0; sig_dim(dim, depth)],
        }
    }

    pub fn from_coeffs(dim: usize, depth: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim == 0 || depth == 0 {
            return Err(Error::invalid("signature needs dim >= 1 and depth >= 1"));
        }
        if coeffs.len() != sig_dim(dim, depth) {
            return Err(Error::invalid(format!(
                "expected {} coefficients for dim {dim} depth {depth}, got {}",
                sig_dim(dim, depth),
                coeffs.len()
            )));
        }
        Ok(Signature { dim, depth, coeffs })
    }

    /// Signature of a single straight segment: the truncated tensor
    /// exponential, degree-k block = increment^{(x)k} / k!.
    pub fn segment(increment: &[f64], depth: usize) -> Self {
        let mut sig = Signature::zero(increment.len(), depth);
        let d = sig.dim;
        sig.coeffs[..d].copy_from_slice(increment);
        let mut prev = 0;
        for k in 2..=depth {
            let start = level_offset(d, k);
            let prev_len = d.pow(k as u32 - 1);
            for w in 0..prev_len {
                let base = sig.coeffs[prev + w] / k as f64;
                for (i, &x) in increment.iter().enumerate() {
                    sig.coeffs[start + w * d + i] = base * x;
                }
            }
            prev = start;
        }
        sig
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// The `d^k` coefficients of degree `k`.
    pub fn level(&self, k: usize) -> &[f64] {
        assert!(
            k >= 1 && k <= self.depth,
            "degree {k} outside 1..={}",
            self.depth
        );
        let start = level_offset(self.dim, k);
        &self.coeffs[start..start + self.dim.pow(k as u32)]
    }

    /// Flat index of a word (0-based letters).
    pub fn word_index(&self, word: &[usize]) -> usize {
        let k = word.len();
        assert!(
            k >= 1 && k <= self.depth,
            "word length {k} outside 1..={}",
            self.depth
        );
        let local = word.iter().fold(0, |acc, &l| {
            assert!(
                l < self.dim,
                "letter {l} outside alphabet of size {}",
                self.dim
            );
            acc * self.dim + l
        });
        level_offset(self.dim, k) + local
    }

    pub fn coeff(&self, word: &[usize]) -> f64 {
        self.coeffs[self.word_index(word)]
    }

    /// Chen product: the signature of `self`'s path followed by `other`'s.
    pub fn concat(&self, other: &Signature) -> Result<Signature> {
        if self.dim != other.dim || self.depth != other.depth {
            return Err(Error::invalid(format!(
                "cannot concatenate signatures of (dim, depth) = ({}, {}) and ({}, {})",
                self.dim, self.depth, other.dim, other.depth
            )));
        }
        let d = self.dim;
        let mut out = Signature::zero(d, self.depth);
        for k in 1..=self.depth {
            let start = level_offset(d, k);
            let block = &mut out.coeffs[start..start + d.pow(k as u32)];
            // split w = u.v with |u| = j; the empty word carries coefficient 1
            for j in 0..=k {
                let right_len = d.pow((k - j) as u32);
                let left: &[f64] = if j == 0 { &[1.0] } else { self.level(j) };
                let right: &[f64] = if j == k { &[1.0] } else { other.level(k - j) };
                for (u, &a) in left.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let dst = &mut block[u * right_len..(u + 1) * right_len];
                    for (o, &b) in dst.iter_mut().zip(right) {
                        *o += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Appends a straight segment in place. Equivalent to
    /// `self.concat(&Signature::segment(increment, depth))` but evaluates the
    /// product in Horner form without materialising the segment signature.
    pub fn extend(&mut self, increment: &[f64], scratch: &mut ExtendScratch) {
        assert_eq!(increment.len(), self.dim, "increment dimension mismatch");
        let d = self.dim;
        let (cur, next) = scratch.buffers(d, self.depth);
        for k in (1..=self.depth).rev() {
            // U_1 = S_1 + delta / k
            let kf = k as f64;
            for i in 0..d {
                cur[i] = self.coeffs[i] + increment[i] / kf;
            }
            // U_l = S_l + U_{l-1} (x) delta / (k - l + 1)
            for l in 2..=k {
                let start = level_offset(d, l);
                let prev_len = d.pow(l as u32 - 1);
                let scale = 1.0 / (k - l + 1) as f64;
                for w in 0..prev_len {
                    let u = cur[w] * scale;
                    for i in 0..d {
                        next[w * d + i] = self.coeffs[start + w * d + i] + u * increment[i];
                    }
                }
                std::mem::swap(cur, next);
            }
            let start = level_offset(d, k);
            let len = d.pow(k as u32);
            self.coeffs[start..start + len].copy_from_slice(&cur[..len]);
        }
    }

    /// Signed area between the path and its chord in the `(i, j)` plane:
    /// half the antisymmetric part of the degree-2 block.
    pub fn levy_area(&self, i: usize, j: usize) -> Result<f64> {
        if self.depth < 2 {
            return Err(Error::invalid("Levy area needs a signature of depth >= 2"));
        }
        if i == j || i >= self.dim || j >= self.dim {
            return Err(Error::invalid(format!(
                "Levy area needs two distinct letters below {}, got ({i}, {j})",
                self.dim
            )));
        }
        Ok(0.5 * (self.coeff(&[i, j]) - self.coeff(&[j, i])))
    }
}

/// Reusable buffers for [`Signature::extend`].
#[derive(Debug, Default)]
pub struct ExtendScratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ExtendScratch {
    fn buffers(&mut self, dim: usize, depth: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
        let len = dim.pow(depth as u32);
        if self.a.len() < len {
            self.a.resize(len, 0.0);
            self.b.resize(len, 0.0);
        }
        (&mut self.a, &mut self.b)
    }
}

fn level_offset(dim: usize, k: usize) -> usize {
    sig_dim(dim, k - 1)
}

/// Depth-`depth` signature of a piecewise-linear path.
pub fn signature(path: &Path, depth: usize) -> Signature {
    let mut sig = Signature::zero(path.dim(), depth);
    let mut scratch = ExtendScratch::default();
    let mut inc = vec![0.0; path.dim()];
    for (a, b) in path.points().zip(path.points().skip(1)) {
        for ((x, &pa), &pb) in inc.iter_mut().zip(a).zip(b) {
            *x = pb - pa;
        }
        sig.extend(&inc, &mut scratch);
    }
    sig
}
