//! Lloyd's k-means with k-means++ seeding.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded with
//! `seed_from_u64(params.seed)`; restart `r` uses ChaCha stream `r`. The
//! generator is fully specified and platform independent, so a given
//! `(data, params)` pair clusters identically everywhere. Restarts may run
//! in parallel: each owns its stream and the winner is chosen by lowest
//! inertia, ties going to the lowest restart index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::geometry::{squared_euclidean, Matrix};

/// Name of the generator behind every seeded draw, echoed into reports.
pub const PRNG: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64, stream = restart index)";

/// Default seed for the purity clustering.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Lloyd iterations stop once no centroid moves farther than this.
    pub tolerance: f64,
    /// Independent k-means++ restarts; the lowest inertia wins.
    pub n_init: usize,
}

impl KMeansParams {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            seed: DEFAULT_SEED,
            max_iterations: 300,
            tolerance: 1e-4,
            n_init: 10,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), ClusterError> {
        let bad = |m: &str| Err(ClusterError::InvalidParams(m.to_string()));
        if self.k < 1 {
            return bad("k must be at least 1");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad("tolerance must be positive");
        }
        if self.n_init < 1 {
            return bad("n_init must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Cluster index of each row, in `[0, k)`.
    pub assignments: Vec<usize>,
    /// `k × D`; each centroid is the mean of its members.
    pub centroids: Matrix,
    pub iterations_run: usize,
    pub converged: bool,
    /// Sum of squared distances from each row to its centroid.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration of the winning restart.
    pub inertia_trace: Vec<f64>,
}

pub fn kmeans(data: &Matrix, params: &KMeansParams) -> Result<ClusterAssignment, ClusterError> {
    params.validate()?;
    if data.rows() < params.k {
        return Err(ClusterError::TooFewSamples {
            needed: params.k,
            got: data.rows(),
        });
    }
    if data.as_flat().iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite);
    }
    let runs: Vec<ClusterAssignment> = (0..params.n_init)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(restart as u64);
            let init = kmeans_plus_plus(data, params.k, &mut rng);
            lloyd(data, init, params)
        })
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate().skip(1) {
        if run.inertia < runs[best].inertia {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).expect("n_init >= 1"))
}

fn kmeans_plus_plus(data: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.rows();
    let mut centers = Vec::with_capacity(k);
    let first = rng.random_range(0..n as u64) as usize;
    centers.push(data.row(first).to_vec());
    let mut nearest: Vec<f64> = data
        .iter_rows()
        .map(|r| squared_euclidean(r, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                chosen = Some(i);
                if acc > target {
                    break;
                }
            }
            chosen.expect("positive total has a positive weight")
        } else {
            // Every point already sits on a center.
            rng.random_range(0..n as u64) as usize
        };
        let c = data.row(pick).to_vec();
        for (w, r) in nearest.iter_mut().zip(data.iter_rows()) {
            *w = w.min(squared_euclidean(r, &c));
        }
        centers.push(c);
    }
    centers
}

fn nearest_center(row: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = squared_euclidean(row, center);
        // Strict comparison: ties keep the lower cluster index.
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn means(data: &Matrix, assign: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; data.cols()]; k];
    let mut counts = vec![0usize; k];
    for (row, &c) in data.iter_rows().zip(assign) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(row) {
            *s += x;
        }
    }
    for (s, &m) in sums.iter_mut().zip(&counts) {
        if m > 0 {
            s.iter_mut().for_each(|v| *v /= m as f64);
        }
    }
    (sums, counts)
}

/// Moves the point farthest from its own centroid (lowest index on ties)
/// into each empty cluster until none is empty.
fn repair_empty(data: &Matrix, assign: &mut [usize], k: usize) -> Vec<Vec<f64>> {
    loop {
        let (centers, counts) = means(data, assign, k);
        let Some(empty) = counts.iter().position(|&m| m == 0) else {
            return centers;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, row) in data.iter_rows().enumerate() {
            if counts[assign[i]] < 2 {
                continue;
            }
            let d = squared_euclidean(row, &centers[assign[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("n >= k leaves a cluster with two or more members");
        assign[i] = empty;
    }
}

fn inertia(data: &Matrix, assign: &[usize], centers: &[Vec<f64>]) -> f64 {
    data.iter_rows()
        .zip(assign)
        .map(|(r, &c)| squared_euclidean(r, &centers[c]))
        .sum()
}

fn lloyd(data: &Matrix, init: Vec<Vec<f64>>, params: &KMeansParams) -> ClusterAssignment {
    let k = params.k;
    let mut centers = init;
    let mut assign = vec![0usize; data.rows()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iterations {
        iterations += 1;
        for (a, row) in assign.iter_mut().zip(data.iter_rows()) {
            *a = nearest_center(row, &centers);
        }
        let updated = repair_empty(data, &mut assign, k);
        let shift = centers
            .iter()
            .zip(&updated)
            .map(|(old, new)| squared_euclidean(old, new).sqrt())
            .fold(0.0, f64::max);
        centers = updated;
        trace.push(inertia(data, &assign, &centers));
        if shift < params.tolerance {
            converged = true;
            break;
        }
    }
    let flat: Vec<f64> = centers.iter().flatten().copied().collect();
    ClusterAssignment {
        inertia: *trace.last().expect("at least one iteration"),
        assignments: assign,
        centroids: Matrix::from_flat(flat, k, data.cols()),
        iterations_run: iterations,
        converged,
        inertia_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(points: &[f64]) -> Matrix {
        Matrix::from_flat(points.to_vec(), points.len(), 1)
    }

    #[test]
    fn two_obvious_pairs() {
        let data = line(&[0.0, 0.1, 10.0, 10.1]);
        let out = kmeans(&data, &KMeansParams::new(2)).unwrap();
        let a = &out.assignments;
        assert_eq!(a[0], a[1]);
        assert_eq!(a[2], a[3]);
        assert_ne!(a[0], a[2]);
        let mut c: Vec<f64> = out.centroids.as_flat().to_vec();
        c.sort_by(f64::total_cmp);
        assert!((c[0] - 0.05).abs() < 1e-12 && (c[1] - 10.05).abs() < 1e-12);
        assert!(out.converged);

        // Exhaustive check over both 2-2 splits and every other partition
        // shape: this one has the lowest inertia.
        let cost = |groups: &[&[f64]]| -> f64 {
            groups
                .iter()
                .map(|g| {
                    let m = g.iter().sum::<f64>() / g.len() as f64;
                    g.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                })
                .sum()
        };
        let pts = [0.0, 0.1, 10.0, 10.1];
        let mut best = f64::INFINITY;
        for mask in 1u32..15 {
            let (l, r): (Vec<f64>, Vec<f64>) = {
                let l = (0..4).filter(|i| mask & (1 << i) != 0).map(|i| pts[i]).collect();
                let r = (0..4).filter(|i| mask & (1 << i) == 0).map(|i| pts[i]).collect();
                (l, r)
            };
            best = best.min(cost(&[&l, &r]));
        }
        assert!((out.inertia - best).abs() < 1e-12);
    }

    #[test]
    fn k_one_is_global_mean() {
        let pts = [1.0, 2.0, 4.0, 9.0];
        let out = kmeans(&line(&pts), &KMeansParams::new(1)).unwrap();
        let mean = pts.iter().sum::<f64>() / 4.0;
        assert!((out.centroids.row(0)[0] - mean).abs() < 1e-12);
        let var = pts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((out.inertia - var * 4.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let data = Matrix::from_rows(&[[0.0, 1.0], [5.0, 5.0], [2.0, -3.0], [7.0, 0.5], [1.0, 1.0]]).unwrap();
        let out = kmeans(&data, &KMeansParams::new(5)).unwrap();
        assert_eq!(out.inertia, 0.0);
        let mut a = out.assignments.clone();
        a.sort();
        assert_eq!(a, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let data = line(&[1.0, 1.0, 1.0, 2.0]);
        let out = kmeans(&data, &KMeansParams::new(3)).unwrap();
        let mut seen = out.assignments.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 3);
        assert_eq!(out.inertia, 0.0);
    }

    #[test]
    fn errors() {
        let data = line(&[0.0, 1.0]);
        assert!(matches!(kmeans(&data, &KMeansParams::new(3)), Err(ClusterError::TooFewSamples { .. })));
        assert!(matches!(kmeans(&data, &KMeansParams::new(0)), Err(ClusterError::InvalidParams(_))));
        let mut p = KMeansParams::new(1);
        p.tolerance = 0.0;
        assert!(matches!(kmeans(&data, &p), Err(ClusterError::InvalidParams(_))));
        let nan = line(&[0.0, f64::NAN]);
        assert_eq!(kmeans(&nan, &KMeansParams::new(1)), Err(ClusterError::NonFinite));
    }

    fn blobs() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64)> {
        (8usize..60, 1usize..4, 1usize..6, any::<u64>()).prop_flat_map(|(n, d, k, seed)| {
            (
                prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n),
                Just(k),
                Just(seed),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn invariants((rows, k, seed) in blobs()) {
            let data = Matrix::from_rows(&rows).unwrap();
            let params = KMeansParams::new(k).with_seed(seed);
            let out = kmeans(&data, &params).unwrap();
            let again = kmeans(&data, &params).unwrap();
            prop_assert_eq!(&out, &again);

            prop_assert!(out.assignments.iter().all(|&c| c < k));
            prop_assert!(out.inertia >= 0.0);
            for w in out.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "trace {:?}", out.inertia_trace);
            }
            for t in &out.inertia_trace {
                prop_assert!(out.inertia <= t * (1.0 + 1e-12) + 1e-12);
            }
            for c in 0..k {
                let members: Vec<&[f64]> = (0..rows.len())
                    .filter(|&i| out.assignments[i] == c)
                    .map(|i| rows[i].as_slice())
                    .collect();
                prop_assert!(!members.is_empty());
                let mean = crate::geometry::centroid(&members).unwrap();
                for (a, b) in mean.iter().zip(out.centroids.row(c)) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
