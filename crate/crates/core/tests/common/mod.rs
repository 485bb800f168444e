//! Shared test support: a naive, direct-from-definition implementation of
//! every metric and random dataset generators.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use timbre_latent::clustering::{kmeans, KMeansParams};
use timbre_latent::dataset::{LatentDataset, SampleLabel};
use timbre_latent::geometry::Matrix;
use timbre_latent::metrics::{Metric, MetricReport, TrajectoryMode};
use timbre_latent::schema::LabelSchema;

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

fn avg(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pop_std(v: &[f64]) -> f64 {
    let m = avg(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn centroid(points: &[&Vec<f64>]) -> Vec<f64> {
    let d = points[0].len();
    (0..d).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / points.len() as f64).collect()
}

/// Mean silhouette with singletons scored 0 and `0/0` scored 0.
pub fn silhouette(points: &[&Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut by_class: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for j in 0..n {
            if j != i {
                by_class.entry(labels[j]).or_default().push(dist(points[i], points[j]));
            }
        }
        let Some(own) = by_class.get(&labels[i]) else { continue };
        let a = avg(own);
        let mut b = f64::INFINITY;
        for (c, ds) in &by_class {
            if *c != labels[i] {
                b = b.min(avg(ds));
            }
        }
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

pub fn purity(pred: &[usize], truth: &[usize]) -> f64 {
    let mut total = 0;
    for c in pred.iter().collect::<BTreeSet<_>>() {
        let mut best = 0;
        for t in truth.iter().collect::<BTreeSet<_>>() {
            let overlap = (0..pred.len()).filter(|&i| pred[i] == *c && truth[i] == *t).count();
            best = best.max(overlap);
        }
        total += best;
    }
    total as f64 / pred.len() as f64
}

pub fn path_linearity(c: &[Vec<f64>]) -> f64 {
    let path: f64 = (1..c.len()).map(|i| dist(&c[i - 1], &c[i])).sum();
    if path == 0.0 {
        1.0
    } else {
        (dist(&c[0], &c[c.len() - 1]) / path).min(1.0)
    }
}

pub fn path_step_consistency(c: &[Vec<f64>]) -> f64 {
    let steps: Vec<f64> = (1..c.len()).map(|i| dist(&c[i - 1], &c[i])).collect();
    let m = avg(&steps);
    if m == 0.0 {
        1.0
    } else {
        1.0 / (1.0 + pop_std(&steps) / m)
    }
}

/// Plain-vector view of a dataset.
pub struct Plain {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<(usize, usize, usize)>,
    pub magnitude_levels: usize,
}

impl Plain {
    pub fn of(ds: &LatentDataset) -> Self {
        Self {
            rows: (0..ds.len()).map(|i| ds.row(i).to_vec()).collect(),
            labels: ds.labels().iter().map(|l| (l.descriptor, l.magnitude, l.pitch)).collect(),
            magnitude_levels: ds.schema().magnitudes().len(),
        }
    }

    fn select<F: Fn(&(usize, usize, usize)) -> bool>(&self, keep: F) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| keep(&self.labels[i])).collect()
    }

    fn values<F: Fn(&(usize, usize, usize)) -> usize>(&self, f: F) -> BTreeSet<usize> {
        self.labels.iter().map(f).collect()
    }
}

fn mean_or_none(v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(avg(&v))
    }
}

/// All eight aggregates straight from their definitions, `None` where the
/// metric is undefined. Purity recounts the library's k-means assignment.
pub fn oracle(ds: &LatentDataset, seed: u64, mode: TrajectoryMode) -> [Option<f64>; 8] {
    let x = Plain::of(ds);
    let all: Vec<&Vec<f64>> = x.rows.iter().collect();
    let desc: Vec<usize> = x.labels.iter().map(|l| l.0).collect();
    let classes = x.values(|l| l.0).len();

    let global = (classes >= 2).then(|| silhouette(&all, &desc));

    let purity_v = (classes >= 2).then(|| {
        let fit = kmeans(ds.embeddings(), &KMeansParams::new(classes).with_seed(seed)).unwrap();
        purity(&fit.assignments, &desc)
    });

    let mut comp = Vec::new();
    let mut mag_sil = Vec::new();
    for d in x.values(|l| l.0) {
        let idx = x.select(|l| l.0 == d);
        if idx.len() >= 2 {
            let mut ds_ = Vec::new();
            for a in 0..idx.len() {
                for b in a + 1..idx.len() {
                    ds_.push(dist(&x.rows[idx[a]], &x.rows[idx[b]]));
                }
            }
            comp.push(1.0 / (1.0 + avg(&ds_)));
        }
        let mags: Vec<usize> = idx.iter().map(|&i| x.labels[i].1).collect();
        if mags.iter().collect::<BTreeSet<_>>().len() >= 2 {
            let pts: Vec<&Vec<f64>> = idx.iter().map(|&i| &x.rows[i]).collect();
            mag_sil.push(silhouette(&pts, &mags));
        }
    }

    let mut within = Vec::new();
    for p in x.values(|l| l.2) {
        let idx = x.select(|l| l.2 == p);
        let ds_: Vec<usize> = idx.iter().map(|&i| x.labels[i].0).collect();
        if ds_.iter().collect::<BTreeSet<_>>().len() >= 2 {
            let pts: Vec<&Vec<f64>> = idx.iter().map(|&i| &x.rows[i]).collect();
            within.push(silhouette(&pts, &ds_));
        }
    }

    let mut cross = Vec::new();
    for (d, m) in x.labels.iter().map(|l| (l.0, l.1)).collect::<BTreeSet<_>>() {
        let pitches = x.values(|l| if l.0 == d && l.1 == m { l.2 } else { usize::MAX });
        let cents: Vec<Vec<f64>> = pitches
            .iter()
            .filter(|&&p| p != usize::MAX)
            .map(|&p| {
                let pts: Vec<&Vec<f64>> =
                    x.select(|l| *l == (d, m, p)).iter().map(|&i| &x.rows[i]).collect();
                centroid(&pts)
            })
            .collect();
        if cents.len() >= 3 {
            let mut ds_ = Vec::new();
            for a in 0..cents.len() {
                for b in a + 1..cents.len() {
                    ds_.push(dist(&cents[a], &cents[b]));
                }
            }
            cross.push(1.0 / (1.0 + pop_std(&ds_)));
        }
    }

    let mut lin = Vec::new();
    let mut step = Vec::new();
    if x.magnitude_levels >= 2 {
        let keys: BTreeSet<(usize, usize)> = x
            .labels
            .iter()
            .map(|l| (l.0, if mode == TrajectoryMode::PerPitch { l.2 } else { 0 }))
            .collect();
        'traj: for (d, p) in keys {
            let mut cents = Vec::new();
            for m in 0..x.magnitude_levels {
                let idx = x.select(|l| {
                    l.0 == d && l.1 == m && (mode == TrajectoryMode::Pooled || l.2 == p)
                });
                if idx.is_empty() {
                    continue 'traj;
                }
                let pts: Vec<&Vec<f64>> = idx.iter().map(|&i| &x.rows[i]).collect();
                cents.push(centroid(&pts));
            }
            lin.push(path_linearity(&cents));
            step.push(path_step_consistency(&cents));
        }
    }

    [
        global,
        purity_v,
        mean_or_none(comp),
        mean_or_none(mag_sil),
        mean_or_none(within),
        mean_or_none(cross),
        mean_or_none(lin),
        mean_or_none(step),
    ]
}

pub fn aggregates(r: &MetricReport) -> [Option<f64>; 8] {
    Metric::ALL.map(|m| r.get(m).aggregate())
}

pub fn random_schema(rng: &mut ChaCha8Rng) -> LabelSchema {
    let nd = rng.random_range(1..=5);
    let nm = rng.random_range(1..=4);
    let np = rng.random_range(1..=5);
    let mut mags: Vec<f64> = (1..=nm).map(|i| i as f64 / nm as f64).collect();
    mags.sort_by(f64::total_cmp);
    LabelSchema::new(
        (0..nd).map(|i| format!("desc{i}")).collect(),
        mags,
        (0..np).map(|i| format!("P{i}")).collect(),
    )
    .unwrap()
}

/// Random labels over a random schema with loosely clustered embeddings;
/// some label combinations are deliberately absent.
pub fn random_dataset(rng: &mut ChaCha8Rng, max_n: usize, max_d: usize) -> LatentDataset {
    let schema = random_schema(rng);
    let (nd, nm, np) = (schema.descriptors().len(), schema.magnitudes().len(), schema.pitches().len());
    let n = rng.random_range(2..=max_n);
    let d = rng.random_range(1..=max_d);
    let spread: f64 = rng.random_range(0.0..3.0);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let restrict_pitch = rng.random_bool(0.3);
    for _ in 0..n {
        let l = SampleLabel::new(
            rng.random_range(0..nd),
            rng.random_range(0..nm),
            if restrict_pitch { rng.random_range(0..np.min(2)) } else { rng.random_range(0..np) },
        );
        let row: Vec<f64> = (0..d)
            .map(|k| {
                let z: f64 = rng.sample(StandardNormal);
                spread * ((l.descriptor * 7 + l.pitch * 3 + k) % 5) as f64 + l.magnitude as f64 * 0.5 + z
            })
            .collect();
        rows.push(row);
        labels.push(l);
    }
    // An occasional exact duplicate exercises zero distances.
    if n >= 3 && rng.random_bool(0.3) {
        rows[1] = rows[0].clone();
        labels[1] = labels[0];
    }
    LatentDataset::new(Matrix::from_rows(&rows).unwrap(), labels, schema, "random").unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
pub fn random_rotation(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

pub fn rigid_motion(ds: &LatentDataset, rot: &[Vec<f64>], shift: &[f64]) -> LatentDataset {
    ds.map_embeddings(|r| {
        rot.iter()
            .zip(shift)
            .map(|(q, s)| q.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() + s)
            .collect()
    })
    .unwrap()
}

/// Largest absolute difference between two aggregate vectors, or `None` if
/// they disagree about which metrics are defined.
pub fn max_diff(a: &[Option<f64>; 8], b: &[Option<f64>; 8]) -> Option<f64> {
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        match (x, y) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
            (None, None) => {}
            _ => return None,
        }
    }
    Some(worst)
}
