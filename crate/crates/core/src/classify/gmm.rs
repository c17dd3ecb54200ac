use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{argmax, check_dim, check_rows, index_classes};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::traces::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// `Sigma_k = sigma_k^2 I`.
    #[default]
    Spherical,
    Full,
}

/// One Gaussian per class, fit by maximum likelihood on labeled data.
///
/// With labels known, the EM fixed point of a one-component-per-class mixture
/// is the class sample mean and (biased) sample covariance, which is what
/// [`gmm_fit`] computes directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub classes: Vec<Label>,
    pub n_features: usize,
    pub covariance_mode: CovarianceMode,
    pub means: Vec<Vec<f64>>,
    /// Spherical: one entry (`sigma^2`). Full: row-major `d x d`.
    pub covariances: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
}

const GMM_RIDGE: f64 = 1e-9;

pub fn gmm_fit(
    features: &FeatureMatrix,
    labels: &[Label],
    mode: CovarianceMode,
) -> Result<GmmModel> {
    check_rows(features, labels)?;
    let d = features.n_cols;
    let (classes, idx) = index_classes(labels);
    let k = classes.len();
    let mut counts = vec![0usize; k];
    let mut means = vec![vec![0.0; d]; k];
    for (row, &c) in features.rows().zip(&idx) {
        counts[c] += 1;
        for (m, &x) in means[c].iter_mut().zip(row) {
            *m += x;
        }
    }
    if let Some(c) = counts.iter().position(|&n| n < 2) {
        return Err(Error::invalid(format!(
            "class {} has {} rows; the Gaussian model needs at least 2",
            classes[c], counts[c]
        )));
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|x| *x /= n as f64);
    }

    // ridge relative to the overall per-feature variance, floored for constant data
    let total_mean: Vec<f64> = (0..d)
        .map(|j| features.rows().map(|r| r[j]).sum::<f64>() / features.n_rows as f64)
        .collect();
    let total_var = features
        .rows()
        .map(|r| {
            r.iter()
                .zip(&total_mean)
                .map(|(x, m)| (x - m).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / (features.n_rows * d) as f64;
    let ridge = GMM_RIDGE * if total_var > 0.0 { total_var } else { 1.0 };

    let covariances = match mode {
        CovarianceMode::Spherical => {
            let mut ss = vec![0.0; k];
            for (row, &c) in features.rows().zip(&idx) {
                ss[c] += row
                    .iter()
                    .zip(&means[c])
                    .map(|(x, m)| (x - m).powi(2))
                    .sum::<f64>();
            }
            ss.iter()
                .zip(&counts)
                .map(|(s, &n)| vec![s / (n * d) as f64 + ridge])
                .collect()
        }
        CovarianceMode::Full => {
            let mut covs = vec![vec![0.0; d * d]; k];
            for (row, &c) in features.rows().zip(&idx) {
                let dev: Vec<f64> = row.iter().zip(&means[c]).map(|(x, m)| x - m).collect();
                let cov = &mut covs[c];
                for a in 0..d {
                    for b in 0..d {
                        cov[a * d + b] += dev[a] * dev[b];
                    }
                }
            }
            for (cov, &n) in covs.iter_mut().zip(&counts) {
                cov.iter_mut().for_each(|v| *v /= n as f64);
                for a in 0..d {
                    cov[a * d + a] += ridge;
                }
            }
            covs
        }
    };
    let n = features.n_rows as f64;
    Ok(GmmModel {
        classes,
        n_features: d,
        covariance_mode: mode,
        means,
        covariances,
        priors: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

impl GmmModel {
    /// `log pi_k + log N(x | mu_k, Sigma_k)` for every class, row by row.
    pub fn log_joint(&self, features: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        check_dim(features, self.n_features)?;
        let d = self.n_features;
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        match self.covariance_mode {
            CovarianceMode::Spherical => Ok(features
                .rows()
                .map(|x| {
                    self.means
                        .iter()
                        .zip(&self.covariances)
                        .zip(&self.priors)
                        .map(|((mu, var), prior)| {
                            let v = var[0];
                            let r2: f64 = x.iter().zip(mu).map(|(a, b)| (a - b).powi(2)).sum();
                            prior.ln() - 0.5 * (d as f64 * (ln2pi + v.ln()) + r2 / v)
                        })
                        .collect()
                })
                .collect()),
            CovarianceMode::Full => {
                let mut factors = Vec::with_capacity(self.classes.len());
                for (c, cov) in self.covariances.iter().enumerate() {
                    let m = DMatrix::from_row_slice(d, d, cov);
                    let chol = Cholesky::new(m).ok_or_else(|| {
                        Error::invalid(format!(
                            "covariance of class {} is not positive definite",
                            self.classes[c]
                        ))
                    })?;
                    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                    factors.push((chol, logdet));
                }
                Ok(features
                    .rows()
                    .map(|x| {
                        factors
                            .iter()
                            .zip(&self.means)
                            .zip(&self.priors)
                            .map(|(((chol, logdet), mu), prior)| {
                                let dev =
                                    DVector::from_iterator(d, x.iter().zip(mu).map(|(a, b)| a - b));
                                let z = chol
                                    .l()
                                    .solve_lower_triangular(&dev)
                                    .expect("nonsingular factor");
                                prior.ln() - 0.5 * (d as f64 * ln2pi + logdet + z.norm_squared())
                            })
                            .collect()
                    })
                    .collect())
            }
        }
    }
}

pub fn gmm_predict(model: &GmmModel, features: &FeatureMatrix) -> Result<Vec<Label>> {
    Ok(model
        .log_joint(features)?
        .iter()
        .map(|scores| model.classes[argmax(scores)])
        .collect())
}
