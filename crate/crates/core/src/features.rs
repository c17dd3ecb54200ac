use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major feature matrix, one row per trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        FeatureMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::invalid(format!(
                "feature buffer holds {} values, expected {n_rows} x {n_cols}",
                data.len()
            )));
        }
        Ok(FeatureMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::invalid(format!(
                    "row {i} has {} columns, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix {
            n_rows: rows.len(),
            n_cols,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
        }
    }

    /// Column-major copy, used by the tree learner.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        let mut cols = vec![Vec::with_capacity(self.n_rows); self.n_cols];
        for row in self.rows() {
            for (c, &v) in cols.iter_mut().zip(row) {
                c.push(v);
            }
        }
        cols
    }
}
