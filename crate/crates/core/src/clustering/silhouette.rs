use rayon::prelude::*;

use super::ClusterError;
use crate::geometry::{euclidean, Matrix};

/// Mean silhouette coefficient of `labels` over the rows of `data`, with
/// Euclidean distance.
///
/// For sample `i`, `a(i)` is its mean distance to the other members of its
/// class and `b(i)` the smallest mean distance to any other class;
/// `s(i) = (b - a) / max(a, b)`. Members of singleton classes contribute 0,
/// as does a sample with `a = b = 0`.
pub fn silhouette(data: &Matrix, labels: &[usize]) -> Result<f64, ClusterError> {
    let s = silhouette_samples(data, labels)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Per-sample silhouette values, in row order.
pub fn silhouette_samples(data: &Matrix, labels: &[usize]) -> Result<Vec<f64>, ClusterError> {
    let n = data.rows();
    if labels.len() != n {
        return Err(ClusterError::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    if n < 2 {
        return Err(ClusterError::TooFewSamples { needed: 2, got: n });
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ClusterError::TooFewClasses {
            found: classes.len(),
        });
    }
    let dense: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    let mut sizes = vec![0usize; classes.len()];
    dense.iter().for_each(|&c| sizes[c] += 1);

    // Each sample's sums are accumulated in ascending row order, so the
    // parallel map yields the same bits as a sequential loop.
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = dense[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let xi = data.row(i);
            let mut sums = vec![0.0; classes.len()];
            for j in 0..n {
                if j != i {
                    sums[dense[j]] += euclidean(xi, data.row(j));
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = sums
                .iter()
                .zip(&sizes)
                .enumerate()
                .filter(|&(c, _)| c != own)
                .map(|(_, (s, &m))| s / m as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect();
    Ok(samples)
}
