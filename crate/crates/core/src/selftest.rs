//! Built-in correctness checks against hand-computed fixtures and a
//! brute-force silhouette. Implementations are injectable so the checks
//! themselves can be shown to catch a broken primitive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{self, ClusterAssignment, ClusterError, KMeansParams};
use crate::dataset::{LatentDataset, SampleLabel};
use crate::geometry::{self, Matrix};
use crate::grouping::GroupKey;
use crate::metrics::{self, MetricError, MetricValue};
use crate::schema::LabelSchema;

type MetricFn = fn(&LatentDataset) -> Result<MetricValue, MetricError>;

/// The functions under test.
#[derive(Clone, Copy)]
pub struct Implementations {
    pub silhouette: fn(&Matrix, &[usize]) -> Result<f64, ClusterError>,
    pub purity: fn(&[usize], &[usize]) -> Result<f64, ClusterError>,
    pub kmeans: fn(&Matrix, &KMeansParams) -> Result<ClusterAssignment, ClusterError>,
    pub compactness: MetricFn,
    pub cross_pitch_consistency: MetricFn,
    pub path_linearity: fn(&[Vec<f64>]) -> f64,
    pub path_step_consistency: fn(&[Vec<f64>]) -> f64,
}

impl Default for Implementations {
    fn default() -> Self {
        Self {
            silhouette: clustering::silhouette,
            purity: clustering::purity,
            kmeans: clustering::kmeans,
            compactness: metrics::compactness,
            cross_pitch_consistency: metrics::cross_pitch_consistency,
            path_linearity: metrics::path_linearity,
            path_step_consistency: metrics::path_step_consistency,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = (&'static str, fn(&Implementations) -> Result<(), String>);

const CHECKS: &[Check] = &[
    ("silhouette_four_points", silhouette_four_points),
    ("silhouette_brute_force", silhouette_brute_force),
    ("silhouette_singleton_zero", silhouette_singleton_zero),
    ("silhouette_coincident_classes", silhouette_coincident_classes),
    ("purity_hand_example", purity_hand_example),
    ("purity_relabel_invariant", purity_relabel_invariant),
    ("kmeans_finds_optimum", kmeans_finds_optimum),
    ("kmeans_deterministic", kmeans_deterministic),
    ("compactness_hand_example", compactness_hand_example),
    ("cross_pitch_hand_example", cross_pitch_hand_example),
    ("cross_pitch_equilateral", cross_pitch_equilateral),
    ("linearity_hand_example", linearity_hand_example),
    ("step_consistency_hand_example", step_consistency_hand_example),
];

pub fn run(imp: &Implementations) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| match check(imp) {
            Ok(()) => CheckResult { name, passed: true, detail: String::new() },
            Err(detail) => CheckResult { name, passed: false, detail },
        })
        .collect()
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: got {got}, expected {want} ± {tol}"))
    }
}

fn col(values: &[f64]) -> Matrix {
    Matrix::from_flat(values.to_vec(), values.len(), 1)
}

fn silhouette_four_points(imp: &Implementations) -> Result<(), String> {
    let s = (imp.silhouette)(&col(&[0.0, 0.1, 10.0, 10.1]), &[0, 0, 1, 1]).map_err(|e| e.to_string())?;
    close("silhouette", s, 0.990000, 1e-6)
}

fn brute_silhouette(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = rows.len();
    let dist = |i: usize, j: usize| -> f64 {
        rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    let classes: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
    let mut total = 0.0;
    for i in 0..n {
        let own = labels.iter().filter(|&&l| l == labels[i]).count();
        if own == 1 {
            continue;
        }
        let mean_to = |c: usize| {
            let others: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == c).collect();
            others.iter().map(|&j| dist(i, j)).sum::<f64>() / others.len() as f64
        };
        let a = mean_to(labels[i]);
        let b = classes
            .iter()
            .filter(|&&c| c != labels[i])
            .map(|&c| mean_to(c))
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

fn silhouette_brute_force(imp: &Implementations) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let n = rng.random_range(4..24);
        let d = rng.random_range(1..5);
        let k = rng.random_range(2..5);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let m = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let got = (imp.silhouette)(&m, &labels).map_err(|e| e.to_string())?;
        close(&format!("trial {trial}"), got, brute_silhouette(&rows, &labels), 1e-9)?;
    }
    Ok(())
}

fn silhouette_singleton_zero(imp: &Implementations) -> Result<(), String> {
    // The singleton contributes 0; the pair scores (b - a) / b each.
    let s = (imp.silhouette)(&col(&[0.0, 1.0, 5.0]), &[0, 0, 1]).map_err(|e| e.to_string())?;
    let want = ((5.0 - 1.0) / 5.0 + (4.0 - 1.0) / 4.0) / 3.0;
    close("silhouette", s, want, 1e-12)
}

fn silhouette_coincident_classes(imp: &Implementations) -> Result<(), String> {
    let s = (imp.silhouette)(&col(&[2.0; 6]), &[0, 0, 1, 1, 2, 2]).map_err(|e| e.to_string())?;
    if s <= 0.0 {
        Ok(())
    } else {
        Err(format!("coincident classes scored {s} > 0"))
    }
}

fn purity_hand_example(imp: &Implementations) -> Result<(), String> {
    let p = (imp.purity)(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 1, 2]).map_err(|e| e.to_string())?;
    close("purity", p, 4.0 / 6.0, 1e-12)?;
    let p = (imp.purity)(&[0, 0, 1, 1], &[0, 1, 1, 1]).map_err(|e| e.to_string())?;
    close("purity", p, 3.0 / 4.0, 1e-12)
}

fn purity_relabel_invariant(imp: &Implementations) -> Result<(), String> {
    let truth = [0, 1, 1, 2, 2, 2, 0, 1];
    let pred = [0, 0, 1, 1, 2, 2, 2, 0];
    let relabeled: Vec<usize> = pred.iter().map(|c| (c + 1) % 3 + 10).collect();
    let a = (imp.purity)(&pred, &truth).map_err(|e| e.to_string())?;
    let b = (imp.purity)(&relabeled, &truth).map_err(|e| e.to_string())?;
    close("relabeled purity", b, a, 0.0)
}

fn kmeans_finds_optimum(imp: &Implementations) -> Result<(), String> {
    let a = (imp.kmeans)(&col(&[0.0, 0.1, 10.0, 10.1]), &KMeansParams::new(2)).map_err(|e| e.to_string())?;
    close("inertia", a.inertia, 0.01, 1e-9)?;
    if a.assignments[0] != a.assignments[1] || a.assignments[0] == a.assignments[2] {
        return Err(format!("unexpected partition {:?}", a.assignments));
    }
    Ok(())
}

fn kmeans_deterministic(imp: &Implementations) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let m = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
    let params = KMeansParams::new(4).with_seed(42);
    let a = (imp.kmeans)(&m, &params).map_err(|e| e.to_string())?;
    let b = (imp.kmeans)(&m, &params).map_err(|e| e.to_string())?;
    if a.assignments != b.assignments || a.inertia.to_bits() != b.inertia.to_bits() {
        return Err("two runs with the same seed differ".into());
    }
    Ok(())
}

/// ((descriptor, magnitude, pitch), embedding)
type Sample = ((usize, usize, usize), Vec<f64>);

fn dataset(schema: LabelSchema, samples: &[Sample]) -> Result<LatentDataset, String> {
    let labels = samples.iter().map(|((d, m, p), _)| SampleLabel::new(*d, *m, *p)).collect();
    let rows: Vec<Vec<f64>> = samples.iter().map(|(_, r)| r.clone()).collect();
    let m = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
    LatentDataset::new(m, labels, schema, "selftest").map_err(|e| e.to_string())
}

fn schema(descriptors: usize, pitches: usize) -> LabelSchema {
    LabelSchema::new(
        (0..descriptors).map(|i| format!("d{i}")).collect(),
        vec![1.0],
        (0..pitches).map(|i| format!("p{i}")).collect(),
    )
    .expect("valid schema")
}

fn compactness_hand_example(imp: &Implementations) -> Result<(), String> {
    let ds = dataset(
        schema(2, 1),
        &[
            ((0, 0, 0), vec![0.0]),
            ((0, 0, 0), vec![1.0]),
            ((0, 0, 0), vec![2.0]),
            ((1, 0, 0), vec![5.0]),
            ((1, 0, 0), vec![5.0]),
        ],
    )?;
    let v = (imp.compactness)(&ds).map_err(|e| e.to_string())?;
    close("d0", v.get(&GroupKey::descriptor(0)).unwrap_or(f64::NAN), 3.0 / 7.0, 1e-12)?;
    close("d1", v.get(&GroupKey::descriptor(1)).unwrap_or(f64::NAN), 1.0, 0.0)
}

fn cross_pitch_hand_example(imp: &Implementations) -> Result<(), String> {
    let ds = dataset(
        schema(1, 3),
        &[((0, 0, 0), vec![0.0]), ((0, 0, 1), vec![1.0]), ((0, 0, 2), vec![2.0])],
    )?;
    let v = (imp.cross_pitch_consistency)(&ds).map_err(|e| e.to_string())?;
    close("consistency", v.aggregate, 1.0 / (1.0 + 2f64.sqrt() / 3.0), 1e-12)
}

fn cross_pitch_equilateral(imp: &Implementations) -> Result<(), String> {
    let h = 3f64.sqrt() / 2.0;
    let ds = dataset(
        schema(1, 3),
        &[((0, 0, 0), vec![0.0, 0.0]), ((0, 0, 1), vec![1.0, 0.0]), ((0, 0, 2), vec![0.5, h])],
    )?;
    let v = (imp.cross_pitch_consistency)(&ds).map_err(|e| e.to_string())?;
    close("consistency", v.aggregate, 1.0, 1e-12)
}

fn linearity_hand_example(imp: &Implementations) -> Result<(), String> {
    let straight = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]];
    close("straight", (imp.path_linearity)(&straight), 1.0, 1e-12)?;
    let bent = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 1.0]];
    close("bent", (imp.path_linearity)(&bent), 5f64.sqrt() / 3.0, 1e-12)?;
    close("still", (imp.path_linearity)(&[vec![1.0], vec![1.0]]), 1.0, 0.0)
}

fn step_consistency_hand_example(imp: &Implementations) -> Result<(), String> {
    let even = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
    close("even", (imp.path_step_consistency)(&even), 1.0, 1e-12)?;
    let uneven = vec![vec![0.0], vec![1.0], vec![2.0], vec![4.0]];
    let steps = [1.0, 1.0, 2.0];
    let cv = geometry::population_std(&steps) / geometry::mean(&steps);
    close("uneven", (imp.path_step_consistency)(&uneven), 1.0 / (1.0 + cv), 1e-12)
}
