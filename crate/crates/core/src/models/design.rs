use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Column-major numeric design, the input of every model.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    n_rows: usize,
    cols: Vec<Vec<f64>>,
}

impl Design {
    pub fn from_columns(cols: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = cols.first().map_or(0, Vec::len);
        if let Some(c) = cols.iter().find(|c| c.len() != n_rows) {
            return Err(Error::DimensionMismatch {
                expected: n_rows,
                actual: c.len(),
            });
        }
        Ok(Design { n_rows, cols })
    }

    /// Builds from rows; `n_cols` is needed when `rows` is empty.
    pub fn from_rows(rows: &[Vec<f64>], n_cols: usize) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch {
                expected: n_cols,
                actual: r.len(),
            });
        }
        Ok(Design {
            n_rows: rows.len(),
            cols: (0..n_cols).map(|j| rows.iter().map(|r| r[j]).collect()).collect(),
        })
    }

    pub fn from_matrix(m: &FeatureMatrix) -> Self {
        Design {
            n_rows: m.n_rows(),
            cols: (0..m.n_cols()).map(|j| m.column(j)).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.cols.iter().map(|c| c[i]).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Design {
        Design {
            n_rows: rows.len(),
            cols: self.cols.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Design {
        Design {
            n_rows: self.n_rows,
            cols: cols.iter().map(|&j| self.cols[j].clone()).collect(),
        }
    }

    /// Appends the columns of `other` (same row count).
    pub fn hstack(&self, other: &Design) -> Result<Design> {
        if other.n_rows != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                actual: other.n_rows,
            });
        }
        let mut cols = self.cols.clone();
        cols.extend(other.cols.iter().cloned());
        Ok(Design {
            n_rows: self.n_rows,
            cols,
        })
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n_rows, self.n_cols(), |i, j| self.cols[j][i])
    }

    pub fn has_missing(&self) -> bool {
        self.cols.iter().flatten().any(|v| v.is_nan())
    }
}
