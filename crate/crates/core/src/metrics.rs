//! Latent-space structure and interpretability metrics.
//!
//! Eight metrics, each higher-is-better:
//!
//! | column | what it measures |
//! |---|---|
//! | global silhouette | silhouette of all samples labeled by descriptor |
//! | purity | k-means (k = descriptor classes) purity against descriptors |
//! | compactness | `1 / (1 + mean pairwise distance)` within each descriptor |
//! | magnitude silhouette | silhouette of magnitude levels within each descriptor |
//! | within-pitch silhouette | silhouette of descriptors within each pitch |
//! | cross-pitch consistency | `1 / (1 + σ)` of distances between a descriptor-magnitude's per-pitch centroids |
//! | linearity | endpoint distance over path length of a magnitude trajectory |
//! | step consistency | `1 / (1 + CV)` of consecutive trajectory step lengths |
//!
//! Per-group metrics aggregate by an unweighted mean over eligible groups.
//! Ineligible groups are listed in `skipped` with a reason; a metric with no
//! eligible group at all is an error (and `Undefined` in a report). Every σ
//! is the population standard deviation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{self, ClusterError, KMeansParams, PRNG};
use crate::dataset::{Axis, LatentDataset};
use crate::geometry::{self, euclidean};
use crate::grouping::{group_by, GroupIndex, GroupKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("{0}")]
    Ineligible(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// The eight report columns, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    GlobalSilhouette,
    Purity,
    Compactness,
    MagnitudeSilhouette,
    WithinPitchSilhouette,
    CrossPitchConsistency,
    Linearity,
    StepConsistency,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::GlobalSilhouette,
        Metric::Purity,
        Metric::Compactness,
        Metric::MagnitudeSilhouette,
        Metric::WithinPitchSilhouette,
        Metric::CrossPitchConsistency,
        Metric::Linearity,
        Metric::StepConsistency,
    ];

    /// Column heading used in rendered tables.
    pub fn heading(self) -> &'static str {
        match self {
            Metric::GlobalSilhouette => "Global Sil.",
            Metric::Purity => "Purity",
            Metric::Compactness => "Compact.",
            Metric::MagnitudeSilhouette => "Magn. Sil.",
            Metric::WithinPitchSilhouette => "Within-Pitch Sil.",
            Metric::CrossPitchConsistency => "Cross-Pitch Cons.",
            Metric::Linearity => "Linearity",
            Metric::StepConsistency => "Step Cons.",
        }
    }

    pub fn is_silhouette(self) -> bool {
        matches!(
            self,
            Metric::GlobalSilhouette | Metric::MagnitudeSilhouette | Metric::WithinPitchSilhouette
        )
    }

    /// Silhouettes lie in `[-1, 1]`, everything else in `(0, 1]`.
    pub fn in_range(self, v: f64) -> bool {
        if self.is_silhouette() {
            (-1.0..=1.0).contains(&v)
        } else {
            v > 0.0 && v <= 1.0
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryMode {
    /// One trajectory per (descriptor, pitch).
    #[default]
    PerPitch,
    /// One trajectory per descriptor, centroids taken over all pitches.
    Pooled,
}

impl std::fmt::Display for TrajectoryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrajectoryMode::PerPitch => "per-pitch",
            TrajectoryMode::Pooled => "pooled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownEntry {
    pub key: GroupKey,
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub key: GroupKey,
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub aggregate: f64,
    /// Per-group values in schema order; empty for single-value metrics.
    pub breakdown: Vec<BreakdownEntry>,
    pub skipped: Vec<SkipEntry>,
}

impl MetricValue {
    fn single(value: f64) -> Self {
        Self {
            aggregate: value,
            breakdown: Vec::new(),
            skipped: Vec::new(),
        }
    }

    pub fn get(&self, key: &GroupKey) -> Option<f64> {
        self.breakdown.iter().find(|e| &e.key == key).map(|e| e.value)
    }
}

/// A report cell: either a computed value or the reason it could not be
/// computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EntryRepr", try_from = "EntryRepr")]
pub enum MetricEntry {
    Defined(MetricValue),
    Undefined { reason: String },
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    defined: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aggregate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    breakdown: Option<Vec<BreakdownEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skipped: Option<Vec<SkipEntry>>,
}

impl From<MetricEntry> for EntryRepr {
    fn from(e: MetricEntry) -> Self {
        match e {
            MetricEntry::Defined(v) => EntryRepr {
                defined: true,
                reason: None,
                aggregate: Some(v.aggregate),
                breakdown: Some(v.breakdown),
                skipped: Some(v.skipped),
            },
            MetricEntry::Undefined { reason } => EntryRepr {
                defined: false,
                reason: Some(reason),
                aggregate: None,
                breakdown: None,
                skipped: None,
            },
        }
    }
}

impl TryFrom<EntryRepr> for MetricEntry {
    type Error = String;

    fn try_from(r: EntryRepr) -> Result<Self, Self::Error> {
        if r.defined {
            Ok(MetricEntry::Defined(MetricValue {
                aggregate: r.aggregate.ok_or("defined metric without aggregate")?,
                breakdown: r.breakdown.unwrap_or_default(),
                skipped: r.skipped.unwrap_or_default(),
            }))
        } else {
            Ok(MetricEntry::Undefined {
                reason: r.reason.unwrap_or_default(),
            })
        }
    }
}

impl MetricEntry {
    pub fn aggregate(&self) -> Option<f64> {
        match self {
            MetricEntry::Defined(v) => Some(v.aggregate),
            MetricEntry::Undefined { .. } => None,
        }
    }

    pub fn value(&self) -> Option<&MetricValue> {
        match self {
            MetricEntry::Defined(v) => Some(v),
            MetricEntry::Undefined { .. } => None,
        }
    }
}

impl From<Result<MetricValue, MetricError>> for MetricEntry {
    fn from(r: Result<MetricValue, MetricError>) -> Self {
        match r {
            Ok(v) => MetricEntry::Defined(v),
            Err(e) => MetricEntry::Undefined { reason: e.to_string() },
        }
    }
}

enum GroupOutcome {
    Value(f64),
    Skip(String),
}

/// Evaluates `f` on every group (in parallel, order preserved) and folds the
/// outcomes into a [`MetricValue`].
fn per_group<F>(
    ds: &LatentDataset,
    groups: &[GroupIndex],
    none_eligible: &str,
    f: F,
) -> Result<MetricValue, MetricError>
where
    F: Fn(&GroupIndex) -> Result<GroupOutcome, MetricError> + Sync,
{
    let outcomes: Vec<Result<GroupOutcome, MetricError>> = groups.par_iter().map(&f).collect();
    let mut breakdown = Vec::new();
    let mut skipped = Vec::new();
    for (g, outcome) in groups.iter().zip(outcomes) {
        let label = g.key.display(ds);
        match outcome? {
            GroupOutcome::Value(value) => breakdown.push(BreakdownEntry { key: g.key, label, value }),
            GroupOutcome::Skip(reason) => skipped.push(SkipEntry { key: g.key, label, reason }),
        }
    }
    if breakdown.is_empty() {
        return Err(MetricError::Ineligible(none_eligible.to_string()));
    }
    let values: Vec<f64> = breakdown.iter().map(|e| e.value).collect();
    Ok(MetricValue {
        aggregate: geometry::mean(&values),
        breakdown,
        skipped,
    })
}

fn distinct(ids: impl IntoIterator<Item = usize>) -> usize {
    let mut v: Vec<usize> = ids.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn rows_of<'a>(ds: &'a LatentDataset, rows: &[usize]) -> Vec<&'a [f64]> {
    rows.iter().map(|&r| ds.row(r)).collect()
}

/// Silhouette of every sample, labeled by descriptor.
pub fn global_descriptor_silhouette(ds: &LatentDataset) -> Result<MetricValue, MetricError> {
    let labels = ds.axis_ids(Axis::Descriptor);
    let classes = distinct(labels.iter().copied());
    if classes < 2 {
        return Err(MetricError::Ineligible(format!(
            "needs at least 2 descriptor classes, found {classes}"
        )));
    }
    let s = clustering::silhouette(ds.embeddings(), &labels)?;
    Ok(MetricValue::single(s))
}

/// Number of descriptor classes present; the `k` of the purity clustering.
pub fn descriptor_class_count(ds: &LatentDataset) -> usize {
    distinct(ds.labels().iter().map(|l| l.descriptor))
}

/// Purity of a k-means clustering (k = descriptor classes present, default
/// restarts and tolerance, the given seed) against descriptor labels.
pub fn descriptor_purity(ds: &LatentDataset, seed: u64) -> Result<MetricValue, MetricError> {
    let k = descriptor_class_count(ds);
    if k < 2 {
        return Err(MetricError::Ineligible(format!(
            "needs at least 2 descriptor classes, found {k}"
        )));
    }
    let fit = clustering::kmeans(ds.embeddings(), &KMeansParams::new(k).with_seed(seed))?;
    let p = clustering::purity(&fit.assignments, &ds.axis_ids(Axis::Descriptor))?;
    Ok(MetricValue::single(p))
}

/// Per-descriptor `1 / (1 + mean pairwise distance)`.
pub fn compactness(ds: &LatentDataset) -> Result<MetricValue, MetricError> {
    let groups = group_by(ds, &[Axis::Descriptor]);
    per_group(ds, &groups, "no descriptor has at least 2 samples", |g| {
        if g.member_rows.len() < 2 {
            return Ok(GroupOutcome::Skip("insufficient samples".into()));
        }
        let d = geometry::mean_pairwise_distance(&rows_of(ds, &g.member_rows))
            .expect("group has two rows of equal width");
        Ok(GroupOutcome::Value(1.0 / (1.0 + d)))
    })
}

fn grouped_silhouette(
    ds: &LatentDataset,
    group_axis: Axis,
    label_axis: Axis,
    none_eligible: &str,
    skip_reason: &str,
) -> Result<MetricValue, MetricError> {
    let groups = group_by(ds, &[group_axis]);
    per_group(ds, &groups, none_eligible, |g| {
        let labels: Vec<usize> = g.member_rows.iter().map(|&r| ds.labels()[r].get(label_axis)).collect();
        if distinct(labels.iter().copied()) < 2 {
            return Ok(GroupOutcome::Skip(skip_reason.into()));
        }
        let sub = ds.embeddings().select(&g.member_rows);
        Ok(GroupOutcome::Value(clustering::silhouette(&sub, &labels)?))
    })
}

/// Per-descriptor silhouette of magnitude levels, all pitches pooled.
pub fn magnitude_silhouette(ds: &LatentDataset) -> Result<MetricValue, MetricError> {
    grouped_silhouette(
        ds,
        Axis::Descriptor,
        Axis::Magnitude,
        "no descriptor spans at least 2 magnitude levels",
        "fewer than 2 magnitude levels",
    )
}

/// Per-pitch silhouette of descriptor labels, pitch taken from the ground
/// truth labels.
pub fn within_pitch_silhouette(ds: &LatentDataset) -> Result<MetricValue, MetricError> {
    grouped_silhouette(
        ds,
        Axis::Pitch,
        Axis::Descriptor,
        "no pitch contains at least 2 descriptor classes",
        "fewer than 2 descriptor classes",
    )
}

/// Minimum number of pitches a descriptor-magnitude combination needs for
/// cross-pitch consistency.
pub const MIN_CONSISTENCY_PITCHES: usize = 3;

/// Per (descriptor, magnitude): `1 / (1 + σ)` where σ is the population
/// standard deviation of the pairwise distances between the combination's
/// per-pitch centroids.
pub fn cross_pitch_consistency(ds: &LatentDataset) -> Result<MetricValue, MetricError> {
    let cells = group_by(ds, &[Axis::Descriptor, Axis::Magnitude, Axis::Pitch]);
    let mut groups: Vec<(GroupIndex, Vec<&GroupIndex>)> = Vec::new();
    for cell in &cells {
        let key = GroupKey {
            pitch: None,
            ..cell.key
        };
        match groups.last_mut() {
            Some((g, parts)) if g.key == key => {
                g.member_rows.extend(&cell.member_rows);
                parts.push(cell);
            }
            _ => groups.push((
                GroupIndex {
                    key,
                    member_rows: cell.member_rows.clone(),
                },
                vec![cell],
            )),
        }
    }
    let index: Vec<GroupIndex> = groups.iter().map(|(g, _)| g.clone()).collect();
    per_group(
        ds,
        &index,
        "no descriptor-magnitude combination occurs in at least 3 pitches",
        |g| {
            let (_, parts) = groups.iter().find(|(h, _)| h.key == g.key).expect("group exists");
            if parts.len() < MIN_CONSISTENCY_PITCHES {
                return Ok(GroupOutcome::Skip(format!(
                    "present in fewer than {MIN_CONSISTENCY_PITCHES} pitches"
                )));
            }
            let centroids: Vec<Vec<f64>> = parts
                .iter()
                .map(|p| geometry::centroid(&rows_of(ds, &p.member_rows)).expect("non-empty cell"))
                .collect();
            let d = geometry::pairwise_distances(&centroids).expect("at least 3 centroids");
            Ok(GroupOutcome::Value(1.0 / (1.0 + geometry::population_std(&d))))
        },
    )
}

/// Magnitude-ordered centroids of one trajectory, or the reason it is
/// skipped.
fn trajectory_centroids(ds: &LatentDataset, g: &GroupIndex) -> Result<Vec<Vec<f64>>, String> {
    let levels = ds.schema().magnitudes().len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); levels];
    for &r in &g.member_rows {
        members[ds.labels()[r].magnitude].push(r);
    }
    if members.iter().any(Vec::is_empty) {
        return Err("incomplete magnitude coverage".into());
    }
    Ok(members
        .iter()
        .map(|rows| geometry::centroid(&rows_of(ds, rows)).expect("non-empty level"))
        .collect())
}

fn trajectory_metric(
    ds: &LatentDataset,
    mode: TrajectoryMode,
    score: impl Fn(&[Vec<f64>]) -> f64 + Sync,
) -> Result<MetricValue, MetricError> {
    if ds.schema().magnitudes().len() < 2 {
        return Err(MetricError::Ineligible(
            "schema needs at least 2 magnitude levels for trajectories".into(),
        ));
    }
    let axes: &[Axis] = match mode {
        TrajectoryMode::PerPitch => &[Axis::Descriptor, Axis::Pitch],
        TrajectoryMode::Pooled => &[Axis::Descriptor],
    };
    let groups = group_by(ds, axes);
    per_group(ds, &groups, "no trajectory covers every magnitude level", |g| {
        Ok(match trajectory_centroids(ds, g) {
            Ok(c) => GroupOutcome::Value(score(&c)),
            Err(reason) => GroupOutcome::Skip(reason),
        })
    })
}

fn steps(centroids: &[Vec<f64>]) -> Vec<f64> {
    centroids.windows(2).map(|w| euclidean(&w[0], &w[1])).collect()
}

/// Straight-line distance from the lowest to the highest magnitude
/// centroid over the path length through every level. A zero-length path
/// scores 1.
pub fn path_linearity(centroids: &[Vec<f64>]) -> f64 {
    let path: f64 = steps(centroids).iter().sum();
    if path == 0.0 {
        return 1.0;
    }
    let straight = euclidean(&centroids[0], &centroids[centroids.len() - 1]);
    (straight / path).min(1.0)
}

/// `1 / (1 + CV)` of the consecutive step lengths. All-zero steps score 1.
pub fn path_step_consistency(centroids: &[Vec<f64>]) -> f64 {
    let d = steps(centroids);
    let mu = geometry::mean(&d);
    if mu == 0.0 {
        return 1.0;
    }
    1.0 / (1.0 + geometry::population_std(&d) / mu)
}

pub fn trajectory_linearity(ds: &LatentDataset, mode: TrajectoryMode) -> Result<MetricValue, MetricError> {
    trajectory_metric(ds, mode, path_linearity)
}

pub fn step_consistency(ds: &LatentDataset, mode: TrajectoryMode) -> Result<MetricValue, MetricError> {
    trajectory_metric(ds, mode, path_step_consistency)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Seed of the purity clustering.
    pub seed: u64,
    pub trajectory_mode: TrajectoryMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seed: clustering::DEFAULT_SEED,
            trajectory_mode: TrajectoryMode::PerPitch,
        }
    }
}

/// Evaluation settings as actually applied, recorded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub trajectory_mode: TrajectoryMode,
    /// k of the purity clustering (descriptor classes present).
    pub purity_k: usize,
    pub kmeans_n_init: usize,
    pub kmeans_max_iterations: usize,
    pub kmeans_tolerance: f64,
    pub prng: String,
    pub std_convention: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub d: usize,
    pub descriptors: Vec<LabelCount>,
    pub magnitudes: Vec<LabelCount>,
    pub pitches: Vec<LabelCount>,
}

impl DatasetSummary {
    pub fn of(ds: &LatentDataset) -> Self {
        let counts = |axis| {
            ds.counts(axis)
                .into_iter()
                .enumerate()
                .map(|(id, count)| LabelCount {
                    label: ds.label_name(axis, id),
                    count,
                })
                .collect()
        };
        Self {
            n: ds.len(),
            d: ds.dims(),
            descriptors: counts(Axis::Descriptor),
            magnitudes: counts(Axis::Magnitude),
            pitches: counts(Axis::Pitch),
        }
    }
}

/// One model's row of metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model_name: String,
    pub global_silhouette: MetricEntry,
    pub purity: MetricEntry,
    pub compactness: MetricEntry,
    pub magnitude_silhouette: MetricEntry,
    pub within_pitch_silhouette: MetricEntry,
    pub cross_pitch_consistency: MetricEntry,
    pub linearity: MetricEntry,
    pub step_consistency: MetricEntry,
    /// Absent for reports assembled from published numbers.
    #[serde(default)]
    pub config: Option<ConfigEcho>,
    #[serde(default)]
    pub dataset_summary: Option<DatasetSummary>,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> &MetricEntry {
        match metric {
            Metric::GlobalSilhouette => &self.global_silhouette,
            Metric::Purity => &self.purity,
            Metric::Compactness => &self.compactness,
            Metric::MagnitudeSilhouette => &self.magnitude_silhouette,
            Metric::WithinPitchSilhouette => &self.within_pitch_silhouette,
            Metric::CrossPitchConsistency => &self.cross_pitch_consistency,
            Metric::Linearity => &self.linearity,
            Metric::StepConsistency => &self.step_consistency,
        }
    }

    /// A report holding only aggregate values, in table column order.
    pub fn from_aggregates(model_name: impl Into<String>, values: [f64; 8]) -> Self {
        let e = |v| MetricEntry::Defined(MetricValue::single(v));
        Self {
            model_name: model_name.into(),
            global_silhouette: e(values[0]),
            purity: e(values[1]),
            compactness: e(values[2]),
            magnitude_silhouette: e(values[3]),
            within_pitch_silhouette: e(values[4]),
            cross_pitch_consistency: e(values[5]),
            linearity: e(values[6]),
            step_consistency: e(values[7]),
            config: None,
            dataset_summary: None,
        }
    }
}

/// Computes all eight metrics. A metric whose preconditions fail is
/// recorded as undefined with its reason; the others are still computed.
pub fn evaluate_all(ds: &LatentDataset, config: &EvalConfig) -> MetricReport {
    let mode = config.trajectory_mode;
    let km = KMeansParams::new(descriptor_class_count(ds)).with_seed(config.seed);
    MetricReport {
        model_name: ds.model_name().to_string(),
        global_silhouette: global_descriptor_silhouette(ds).into(),
        purity: descriptor_purity(ds, config.seed).into(),
        compactness: compactness(ds).into(),
        magnitude_silhouette: magnitude_silhouette(ds).into(),
        within_pitch_silhouette: within_pitch_silhouette(ds).into(),
        cross_pitch_consistency: cross_pitch_consistency(ds).into(),
        linearity: trajectory_linearity(ds, mode).into(),
        step_consistency: step_consistency(ds, mode).into(),
        config: Some(ConfigEcho {
            seed: config.seed,
            trajectory_mode: mode,
            purity_k: km.k,
            kmeans_n_init: km.n_init,
            kmeans_max_iterations: km.max_iterations,
            kmeans_tolerance: km.tolerance,
            prng: PRNG.to_string(),
            std_convention: "population".to_string(),
        }),
        dataset_summary: Some(DatasetSummary::of(ds)),
    }
}
