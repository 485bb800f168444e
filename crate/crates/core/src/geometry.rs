//! Dense row-major matrices and the Euclidean primitives every metric is
//! built from.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("row {row} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
}

/// Row-major `rows × cols` matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    /// Wraps a flat row-major buffer. Panics if `data.len()` is not
    /// `rows * cols`.
    pub fn from_flat(data: Vec<f64>, rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer does not match shape");
        Self { data, rows, cols }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, GeometryError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(GeometryError::DimensionMismatch {
                    row: i,
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            data,
            rows: rows.len(),
            cols,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Copies the listed rows, in the given order, into a new matrix.
    pub fn select(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            rows: indices.len(),
            cols: self.cols,
        }
    }

    /// Builds a new matrix from `f` applied to every row.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        let mut cols = self.cols;
        for r in self.iter_rows() {
            let out = f(r);
            cols = out.len();
            data.extend(out);
        }
        Matrix {
            data,
            rows: self.rows,
            cols,
        }
    }
}

/// Squared Euclidean distance. Callers must pass equal-length slices.
#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance. Falls back to a rescaled sum when the plain sum of
/// squares overflows.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let sq = squared_euclidean(a, b);
    if sq.is_finite() {
        return sq.sqrt();
    }
    let scale = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max);
    if !scale.is_finite() || scale == 0.0 {
        return scale;
    }
    let rescaled: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let t = (x - y) / scale;
            t * t
        })
        .sum();
    scale * rescaled.sqrt()
}

/// All `n(n-1)/2` unordered pair distances, in lexicographic `(i, j)` order
/// with `i < j`.
pub fn pairwise_distances<R: AsRef<[f64]>>(rows: &[R]) -> Result<Vec<f64>, GeometryError> {
    if rows.len() < 2 {
        return Err(GeometryError::TooFewRows {
            needed: 2,
            got: rows.len(),
        });
    }
    check_dims(rows)?;
    let n = rows.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(euclidean(rows[i].as_ref(), rows[j].as_ref()));
        }
    }
    Ok(out)
}

/// Mean of all pair distances, accumulated in ascending pair order.
pub fn mean_pairwise_distance<R: AsRef<[f64]>>(rows: &[R]) -> Result<f64, GeometryError> {
    let d = pairwise_distances(rows)?;
    Ok(mean(&d))
}

/// Per-dimension arithmetic mean.
pub fn centroid<R: AsRef<[f64]>>(rows: &[R]) -> Result<Vec<f64>, GeometryError> {
    if rows.is_empty() {
        return Err(GeometryError::TooFewRows { needed: 1, got: 0 });
    }
    check_dims(rows)?;
    let mut acc = vec![0.0; rows[0].as_ref().len()];
    for r in rows {
        for (a, x) in acc.iter_mut().zip(r.as_ref()) {
            *a += x;
        }
    }
    let n = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Arithmetic mean in slice order. Returns NaN for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population (divide-by-n) standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

fn check_dims<R: AsRef<[f64]>>(rows: &[R]) -> Result<(), GeometryError> {
    let expected = rows[0].as_ref().len();
    for (i, r) in rows.iter().enumerate() {
        if r.as_ref().len() != expected {
            return Err(GeometryError::DimensionMismatch {
                row: i,
                expected,
                got: r.as_ref().len(),
            });
        }
    }
    Ok(())
}
