//! Dataset files.
//!
//! Two layouts are supported:
//!
//! * **combined CSV**: header `id,descriptor,magnitude,pitch,z0,...,z{D-1}`,
//!   one sample per line, magnitude written as a percent integer
//!   (`25|50|75|100` for the default schema).
//! * **split**: a directory holding `labels.csv` (header
//!   `id,descriptor,magnitude,pitch`), `embeddings.f64` (N×D little-endian
//!   f64, row-major, no header) and optionally `meta.json` (`{"n":N,"d":D}`).
//!   When `meta.json` is absent the dimensionality must be passed explicitly.
//!
//! Row numbers in diagnostics count data rows from 1 (the header is not a row).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{Axis, DatasetError, LatentDataset, SampleLabel};
use crate::geometry::Matrix;
use crate::schema::LabelSchema;

pub const LABELS_FILE: &str = "labels.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.f64";
pub const META_FILE: &str = "meta.json";

const LABEL_COLUMNS: [&str; 4] = ["id", "descriptor", "magnitude", "pitch"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    CombinedCsv,
    Split,
}

impl Layout {
    /// Directories and label-only CSV files are the split layout; any other
    /// file is a combined CSV.
    pub fn detect(path: &Path) -> Layout {
        if path.is_dir() {
            return Layout::Split;
        }
        let header = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)
            .ok()
            .and_then(|mut r| r.records().next())
            .and_then(Result::ok);
        match header {
            Some(h) if h.len() == LABEL_COLUMNS.len() => Layout::Split,
            _ => Layout::CombinedCsv,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Label vocabulary; the default taxonomy when `None`.
    pub schema: Option<LabelSchema>,
    /// Embedding dimensionality for the split layout.
    pub dims: Option<usize>,
    /// Overrides the name derived from the path.
    pub model_name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    n: usize,
    d: usize,
}

pub fn load_dataset(path: &Path, layout: Layout, opts: &LoadOptions) -> Result<LatentDataset, DatasetError> {
    let schema = opts.schema.clone().unwrap_or_default();
    let name = opts
        .model_name
        .clone()
        .unwrap_or_else(|| default_model_name(path, layout));
    match layout {
        Layout::CombinedCsv => load_combined(path, schema, name),
        Layout::Split => load_split(path, schema, opts.dims, name),
    }
}

/// Writes `ds` so that [`load_dataset`] reproduces it bit-exactly. The split
/// layout treats `path` as a directory and creates it if needed.
pub fn save_dataset(ds: &LatentDataset, path: &Path, layout: Layout) -> Result<(), DatasetError> {
    match layout {
        Layout::CombinedCsv => save_combined(ds, path),
        Layout::Split => save_split(ds, path),
    }
}

fn default_model_name(path: &Path, layout: Layout) -> String {
    let named = match layout {
        Layout::Split if path.is_file() => path.parent().and_then(Path::file_name),
        Layout::Split => path.file_name(),
        Layout::CombinedCsv => path.file_stem(),
    };
    named
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, err: csv::Error) -> DatasetError {
    let row = err.position().map(|p| p.record() as usize).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => DatasetError::Io {
            path: path.display().to_string(),
            source,
        },
        kind => DatasetError::Malformed {
            row,
            message: format!("{kind:?}"),
        },
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn check_header(path: &Path, header: &csv::StringRecord, with_z: bool) -> Result<usize, DatasetError> {
    let bad = |message: String| DatasetError::Header {
        path: path.display().to_string(),
        message,
    };
    if header.len() < LABEL_COLUMNS.len() {
        return Err(bad(format!("expected columns starting with {}", LABEL_COLUMNS.join(","))));
    }
    for (i, want) in LABEL_COLUMNS.iter().enumerate() {
        if header[i].trim() != *want {
            return Err(bad(format!("column {} is {:?}, expected {want:?}", i + 1, &header[i])));
        }
    }
    let dims = header.len() - LABEL_COLUMNS.len();
    if !with_z {
        if dims != 0 {
            return Err(bad(format!("label file has {} extra columns", dims)));
        }
        return Ok(0);
    }
    if dims == 0 {
        return Err(bad("no embedding columns z0..".to_string()));
    }
    for d in 0..dims {
        let got = header[LABEL_COLUMNS.len() + d].trim();
        if got != format!("z{d}") {
            return Err(bad(format!("column {} is {got:?}, expected \"z{d}\"", LABEL_COLUMNS.len() + d + 1)));
        }
    }
    Ok(dims)
}

fn parse_label(schema: &LabelSchema, record: &csv::StringRecord, row: usize) -> Result<SampleLabel, DatasetError> {
    let unknown = |axis, value: &str| DatasetError::UnknownLabel {
        row,
        axis,
        value: value.to_string(),
    };
    let descriptor_raw = record[1].trim();
    let descriptor = schema
        .descriptor_id(descriptor_raw)
        .ok_or_else(|| unknown(Axis::Descriptor, descriptor_raw))?;
    let magnitude_raw = record[2].trim();
    let magnitude = magnitude_raw
        .trim_end_matches('%')
        .parse::<u32>()
        .ok()
        .and_then(|p| schema.magnitude_id_for_percent(p))
        .ok_or_else(|| unknown(Axis::Magnitude, magnitude_raw))?;
    let pitch_raw = record[3].trim();
    let pitch = schema
        .pitch_id(pitch_raw)
        .ok_or_else(|| unknown(Axis::Pitch, pitch_raw))?;
    Ok(SampleLabel::new(descriptor, magnitude, pitch))
}

fn load_combined(path: &Path, schema: LabelSchema, name: String) -> Result<LatentDataset, DatasetError> {
    let mut reader = open_csv(path)?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let dims = check_header(path, &header, true)?;
    let width = header.len();

    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != width {
            return Err(DatasetError::Malformed {
                row,
                message: format!("expected {width} columns, found {}", record.len()),
            });
        }
        labels.push(parse_label(&schema, &record, row)?);
        for d in 0..dims {
            let cell = record[LABEL_COLUMNS.len() + d].trim();
            let v: f64 = cell.parse().map_err(|_| DatasetError::Malformed {
                row,
                message: format!("column z{d}: {cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite { row, column: d });
            }
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(DatasetError::Empty);
    }
    let n = labels.len();
    LatentDataset::new(Matrix::from_flat(values, n, dims), labels, schema, name)
}

struct SplitPaths {
    labels: PathBuf,
    embeddings: PathBuf,
    meta: PathBuf,
}

impl SplitPaths {
    fn new(path: &Path) -> Self {
        let (dir, labels) = if path.is_file() {
            let dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
            (dir, path.to_path_buf())
        } else {
            (path.to_path_buf(), path.join(LABELS_FILE))
        };
        Self {
            labels,
            embeddings: dir.join(EMBEDDINGS_FILE),
            meta: dir.join(META_FILE),
        }
    }
}

fn load_split(
    path: &Path,
    schema: LabelSchema,
    dims: Option<usize>,
    name: String,
) -> Result<LatentDataset, DatasetError> {
    let paths = SplitPaths::new(path);
    let mut reader = open_csv(&paths.labels)?;
    let header = reader.headers().map_err(|e| csv_err(&paths.labels, e))?.clone();
    check_header(&paths.labels, &header, false)?;
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(&paths.labels, e))?;
        if record.len() != LABEL_COLUMNS.len() {
            return Err(DatasetError::Malformed {
                row,
                message: format!("expected {} columns, found {}", LABEL_COLUMNS.len(), record.len()),
            });
        }
        labels.push(parse_label(&schema, &record, row)?);
    }

    let meta = if paths.meta.exists() {
        let text = fs::read_to_string(&paths.meta).map_err(io_err(&paths.meta))?;
        let meta: Meta = serde_json::from_str(&text).map_err(|e| DatasetError::Meta {
            path: paths.meta.display().to_string(),
            message: e.to_string(),
        })?;
        Some(meta)
    } else {
        None
    };
    let dims = match (dims, &meta) {
        (Some(d), _) => d,
        (None, Some(m)) => m.d,
        (None, None) => return Err(DatasetError::MissingDims),
    };
    if dims == 0 {
        return Err(DatasetError::Empty);
    }
    if let Some(m) = &meta {
        if m.d != dims || m.n != labels.len() {
            return Err(DatasetError::Meta {
                path: paths.meta.display().to_string(),
                message: format!(
                    "declares n={} d={}, but found {} label rows and d={dims}",
                    m.n,
                    m.d,
                    labels.len()
                ),
            });
        }
    }

    let bytes = fs::read(&paths.embeddings).map_err(io_err(&paths.embeddings))?;
    let stride = 8 * dims;
    if bytes.len() % stride != 0 {
        return Err(DatasetError::Meta {
            path: paths.embeddings.display().to_string(),
            message: format!("{} bytes is not a whole number of {dims}-dimensional f64 rows", bytes.len()),
        });
    }
    let n_rows = bytes.len() / stride;
    if n_rows != labels.len() {
        return Err(DatasetError::CountMismatch {
            labels: labels.len(),
            embeddings: n_rows,
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    LatentDataset::new(Matrix::from_flat(values, n_rows, dims), labels, schema, name)
}

fn label_fields(ds: &LatentDataset, i: usize) -> [String; 4] {
    let l = ds.labels()[i];
    [
        i.to_string(),
        ds.schema().descriptors()[l.descriptor].clone(),
        ds.schema().magnitude_percent(l.magnitude).to_string(),
        ds.schema().pitches()[l.pitch].clone(),
    ]
}

fn save_combined(ds: &LatentDataset, path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header: Vec<String> = LABEL_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..ds.dims()).map(|d| format!("z{d}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..ds.len() {
        record.clear();
        record.extend(label_fields(ds, i));
        // Debug formatting is the shortest representation that parses back
        // to the same bits.
        record.extend(ds.row(i).iter().map(|v| format!("{v:?}")));
        w.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn save_split(ds: &LatentDataset, dir: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let labels_path = dir.join(LABELS_FILE);
    let file = File::create(&labels_path).map_err(io_err(&labels_path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(LABEL_COLUMNS).map_err(|e| csv_err(&labels_path, e))?;
    for i in 0..ds.len() {
        w.write_record(label_fields(ds, i))
            .map_err(|e| csv_err(&labels_path, e))?;
    }
    w.flush().map_err(io_err(&labels_path))?;

    let emb_path = dir.join(EMBEDDINGS_FILE);
    let file = File::create(&emb_path).map_err(io_err(&emb_path))?;
    let mut out = BufWriter::new(file);
    for v in ds.embeddings().as_flat() {
        out.write_all(&v.to_le_bytes()).map_err(io_err(&emb_path))?;
    }
    out.flush().map_err(io_err(&emb_path))?;

    let meta_path = dir.join(META_FILE);
    let meta = Meta {
        n: ds.len(),
        d: ds.dims(),
    };
    fs::write(&meta_path, serde_json::to_string(&meta).expect("meta serializes"))
        .map_err(io_err(&meta_path))
}
