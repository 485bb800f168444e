//! Multi-model comparison tables: fixed-width text and JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{Metric, MetricEntry, MetricReport};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("a comparison needs at least one report")]
    Empty,
    #[error("malformed report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Reports side by side, with the best row of every column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<MetricReport>,
    /// Row index of the highest aggregate per metric. Columns where no row
    /// is defined are absent.
    pub best_per_column: BTreeMap<Metric, usize>,
}

impl ComparisonTable {
    /// Every metric is higher-is-better (for silhouettes, least negative
    /// wins). Exact ties go to the lexicographically smallest model name,
    /// then to the earlier row.
    pub fn new(rows: Vec<MetricReport>) -> Result<Self, ReportError> {
        if rows.is_empty() {
            return Err(ReportError::Empty);
        }
        let mut best_per_column = BTreeMap::new();
        for metric in Metric::ALL {
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in rows.iter().enumerate() {
                let Some(v) = row.get(metric).aggregate() else {
                    continue;
                };
                let wins = match best {
                    None => true,
                    Some((b, bv)) => v > bv || (v == bv && row.model_name < rows[b].model_name),
                };
                if wins {
                    best = Some((i, v));
                }
            }
            if let Some((i, _)) = best {
                best_per_column.insert(metric, i);
            }
        }
        Ok(Self { rows, best_per_column })
    }

    pub fn is_best(&self, metric: Metric, row: usize) -> bool {
        self.best_per_column.get(&metric) == Some(&row)
    }
}

#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Appended to the best value of each column.
    pub marker: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { marker: "*".into() }
    }
}

const UNDEFINED: &str = "—";

fn width(s: &str) -> usize {
    s.chars().count()
}

/// Renders the comparison as a fixed-width table, one row per model and the
/// eight metric columns in their canonical order, values to 4 decimals
/// (ties rounded half to even). Undefined cells show `—[n]`, with footnote
/// `[n]` below the table giving the reason. Followed by each model's
/// evaluation settings when known.
pub fn render_table(cmp: &ComparisonTable, opts: &RenderOptions) -> Result<String, ReportError> {
    if cmp.rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let pad = " ".repeat(width(&opts.marker));
    let mut footnotes = Vec::new();
    let mut grid: Vec<Vec<String>> = Vec::new();
    for (i, row) in cmp.rows.iter().enumerate() {
        let mut cells = vec![row.model_name.clone()];
        for metric in Metric::ALL {
            let cell = match row.get(metric) {
                MetricEntry::Defined(v) => {
                    let suffix = if cmp.is_best(metric, i) { &opts.marker } else { &pad };
                    format!("{:.4}{suffix}", v.aggregate)
                }
                MetricEntry::Undefined { reason } => {
                    footnotes.push(format!("{}, {}: {reason}", row.model_name, metric.heading()));
                    format!("{UNDEFINED}[{}]{pad}", footnotes.len())
                }
            };
            cells.push(cell);
        }
        grid.push(cells);
    }
    let mut headings = vec!["Model".to_string()];
    headings.extend(Metric::ALL.iter().map(|m| m.heading().to_string()));
    let widths: Vec<usize> = (0..headings.len())
        .map(|c| grid.iter().map(|r| width(&r[c])).chain([width(&headings[c])]).max().unwrap_or(0))
        .collect();

    let line = |cells: &[String]| -> String {
        let mut out = String::new();
        for (c, cell) in cells.iter().enumerate() {
            let fill = " ".repeat(widths[c] - width(cell));
            if c == 0 {
                out.push_str(cell);
                out.push_str(&fill);
            } else {
                out.push_str("  ");
                out.push_str(&fill);
                out.push_str(cell);
            }
        }
        out.trim_end().to_string()
    };

    let mut out = String::new();
    out.push_str(&line(&headings));
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(&rule));
    out.push('\n');
    for cells in &grid {
        out.push_str(&line(cells));
        out.push('\n');
    }
    out.push_str(&format!("{} marks the best value in each column (higher is better).\n", opts.marker));
    for (i, note) in footnotes.iter().enumerate() {
        let _ = writeln!(out, "[{}] {note}", i + 1);
    }
    for row in &cmp.rows {
        if let Some(c) = &row.config {
            let _ = writeln!(
                out,
                "{}: purity k-means k={} seed={:#x} n_init={} ({}); trajectories {}",
                row.model_name, c.purity_k, c.seed, c.kmeans_n_init, c.prng, c.trajectory_mode
            );
        }
        if let Some(s) = &row.dataset_summary {
            let present = |counts: &[crate::metrics::LabelCount]| counts.iter().filter(|c| c.count > 0).count();
            let _ = writeln!(
                out,
                "{}: N={} D={}, {} descriptors, {} magnitudes, {} pitches present",
                row.model_name,
                s.n,
                s.d,
                present(&s.descriptors),
                present(&s.magnitudes),
                present(&s.pitches)
            );
        }
    }
    Ok(out)
}

/// Pretty-printed UTF-8 JSON of the full comparison. Field order is fixed
/// and breakdowns are in schema order, so equal inputs give equal bytes.
pub fn to_json(cmp: &ComparisonTable) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(cmp).expect("comparison serializes");
    out.push(b'\n');
    out
}

pub fn from_json(bytes: &[u8]) -> Result<ComparisonTable, ReportError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// JSON of a single model's report.
pub fn report_to_json(report: &MetricReport) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
    out.push(b'\n');
    out
}
