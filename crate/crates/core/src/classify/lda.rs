use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{argmax, check_dim, check_rows, index_classes};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::traces::Label;

const LDA_RIDGE: f64 = 1e-8;
/// Relative within-class spread below which a column counts as constant.
const CONSTANT_TOL: f64 = 1e-10;

/// Fisher linear discriminant analysis.
///
/// Features are rescaled by their pooled within-class standard deviation
/// before the ridge is applied, so the regularization does not depend on the
/// units of individual columns. Stored directions and scatter matrices are in
/// the original feature coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub classes: Vec<Label>,
    pub n_features: usize,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub overall_mean: Vec<f64>,
    /// Within-class scatter, row-major `d x d`, without the ridge.
    pub scatter_within: Vec<f64>,
    /// Between-class scatter, row-major `d x d`.
    pub scatter_between: Vec<f64>,
    /// Generalized eigenvalues, descending; at most `n_classes - 1` of them.
    pub eigenvalues: Vec<f64>,
    /// Unit length under the regularized within-class scatter.
    pub directions: Vec<Vec<f64>>,
    /// Linear discriminant `w_k . x + b_k` per class.
    pub coef: Vec<Vec<f64>>,
    pub intercept: Vec<f64>,
}

pub fn lda_fit(features: &FeatureMatrix, labels: &[Label]) -> Result<LdaModel> {
    check_rows(features, labels)?;
    let (classes, idx) = index_classes(labels);
    let k = classes.len();
    if k < 2 {
        return Err(Error::invalid("LDA needs at least two classes"));
    }
    let d = features.n_cols;
    let n = features.n_rows;
    let mut counts = vec![0usize; k];
    let mut means = vec![DVector::<f64>::zeros(d); k];
    for (row, &c) in features.rows().zip(&idx) {
        counts[c] += 1;
        means[c] += DVector::from_column_slice(row);
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        *m /= c as f64;
    }
    let overall = features.rows().fold(DVector::zeros(d), |acc, r| {
        acc + DVector::from_column_slice(r)
    }) / n as f64;

    let mut sw = DMatrix::<f64>::zeros(d, d);
    for (row, &c) in features.rows().zip(&idx) {
        let dev = DVector::from_column_slice(row) - &means[c];
        sw.syger(1.0, &dev, &dev, 1.0);
    }
    let mut sb = DMatrix::<f64>::zeros(d, d);
    for (m, &c) in means.iter().zip(&counts) {
        let dev = m - &overall;
        sb.syger(c as f64, &dev, &dev, 1.0);
    }
    // syger only fills the lower triangle
    sw.fill_upper_triangle_with_lower_triangle();
    sb.fill_upper_triangle_with_lower_triangle();

    // Columns that do not vary beyond round-off, such as the pure-time words
    // of a time-augmented signature, would otherwise be blown up to unit
    // scale by the standardization below.
    let mut magnitude = vec![0.0f64; d];
    for row in features.rows() {
        for (m, x) in magnitude.iter_mut().zip(row) {
            *m = m.max(x.abs());
        }
    }
    for (j, &mag) in magnitude.iter().enumerate() {
        let spread = (sw[(j, j)] / n as f64).sqrt();
        if spread <= CONSTANT_TOL * mag {
            sw.row_mut(j).fill(0.0);
            sw.column_mut(j).fill(0.0);
            sb.row_mut(j).fill(0.0);
            sb.column_mut(j).fill(0.0);
        }
    }

    let scale = DVector::from_iterator(
        d,
        sw.diagonal()
            .iter()
            .map(|&v| if v > 0.0 { v.sqrt() } else { 1.0 }),
    );
    let inv_scale = scale.map(|s| 1.0 / s);
    let sw_std = DMatrix::from_fn(d, d, |a, b| sw[(a, b)] * inv_scale[a] * inv_scale[b]);
    let sb_std = DMatrix::from_fn(d, d, |a, b| sb[(a, b)] * inv_scale[a] * inv_scale[b]);
    let trace = sw_std.trace();
    let ridge = LDA_RIDGE * if trace > 0.0 { trace / d as f64 } else { 1.0 };
    let sw_reg = &sw_std + DMatrix::identity(d, d) * ridge;
    let chol = Cholesky::new(sw_reg.clone())
        .ok_or_else(|| Error::invalid("within-class scatter is not positive definite"))?;
    let l = chol.l();
    // M = L^-1 S_B L^-T is symmetric with the same spectrum as S_W^-1 S_B
    let linv_sb = l
        .solve_lower_triangular(&sb_std)
        .expect("nonsingular factor");
    let m = l
        .solve_lower_triangular(&linv_sb.transpose())
        .expect("nonsingular factor");
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let n_dirs = (k - 1).min(d);
    let lt = l.transpose();
    let mut eigenvalues = Vec::with_capacity(n_dirs);
    let mut directions = Vec::with_capacity(n_dirs);
    for &i in order.iter().take(n_dirs) {
        let u = eig.eigenvectors.column(i).into_owned();
        let v_std = lt.solve_upper_triangular(&u).expect("nonsingular factor");
        let mut v: Vec<f64> = v_std.component_mul(&inv_scale).iter().copied().collect();
        // sign convention: largest-magnitude component positive
        let pivot = argmax(&v.iter().map(|x| x.abs()).collect::<Vec<_>>());
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
        directions.push(v);
    }

    // pooled covariance discriminants, computed in the standardized frame
    let dof = n.saturating_sub(k).max(1) as f64;
    let cov_chol = Cholesky::new(sw_reg / dof).expect("scaled positive definite matrix");
    let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let mut coef = Vec::with_capacity(k);
    let mut intercept = Vec::with_capacity(k);
    for (mu, prior) in means.iter().zip(&priors) {
        let mu_std = mu.component_mul(&inv_scale);
        let w_std = cov_chol.solve(&mu_std);
        intercept.push(-0.5 * mu_std.dot(&w_std) + prior.ln());
        coef.push(w_std.component_mul(&inv_scale).iter().copied().collect());
    }

    Ok(LdaModel {
        classes,
        n_features: d,
        priors,
        means: means.iter().map(|m| m.iter().copied().collect()).collect(),
        overall_mean: overall.iter().copied().collect(),
        scatter_within: sw.transpose().as_slice().to_vec(),
        scatter_between: sb.transpose().as_slice().to_vec(),
        eigenvalues,
        directions,
        coef,
        intercept,
    })
}

/// Rows projected onto the leading `k` discriminant directions, centered on
/// the training mean.
pub fn lda_project(model: &LdaModel, features: &FeatureMatrix, k: usize) -> Result<FeatureMatrix> {
    check_dim(features, model.n_features)?;
    if k == 0 || k > model.directions.len() {
        return Err(Error::invalid(format!(
            "cannot project onto {k} directions; the model has {}",
            model.directions.len()
        )));
    }
    let mut out = FeatureMatrix::zeros(features.n_rows, k);
    for (x, o) in features.rows().zip(out.data.chunks_mut(k)) {
        for (oi, v) in o.iter_mut().zip(&model.directions) {
            *oi = x
                .iter()
                .zip(&model.overall_mean)
                .zip(v)
                .map(|((a, m), w)| (a - m) * w)
                .sum();
        }
    }
    Ok(out)
}

pub fn lda_predict(model: &LdaModel, features: &FeatureMatrix) -> Result<Vec<Label>> {
    check_dim(features, model.n_features)?;
    Ok(features
        .rows()
        .map(|x| {
            let scores: Vec<f64> = model
                .coef
                .iter()
                .zip(&model.intercept)
                .map(|(w, b)| w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b)
                .collect();
            model.classes[argmax(&scores)]
        })
        .collect())
}
