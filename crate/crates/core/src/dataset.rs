//! The labeled latent dataset every metric consumes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Matrix;
use crate::schema::{LabelSchema, SchemaError};

/// Label axes of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Descriptor,
    Magnitude,
    Pitch,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Descriptor => "descriptor",
            Axis::Magnitude => "magnitude",
            Axis::Pitch => "pitch",
        })
    }
}

/// Schema indices of one sample's labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleLabel {
    pub descriptor: usize,
    pub magnitude: usize,
    pub pitch: usize,
}

impl SampleLabel {
    pub fn new(descriptor: usize, magnitude: usize, pitch: usize) -> Self {
        Self {
            descriptor,
            magnitude,
            pitch,
        }
    }

    pub fn get(&self, axis: Axis) -> usize {
        match axis {
            Axis::Descriptor => self.descriptor,
            Axis::Magnitude => self.magnitude,
            Axis::Pitch => self.pitch,
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{path}: bad header: {message}")]
    Header { path: String, message: String },
    #[error("malformed row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("unknown {axis} at row {row}: {value:?}")]
    UnknownLabel {
        row: usize,
        axis: Axis,
        value: String,
    },
    #[error("non-finite embedding value at row {row}, column z{column}")]
    NonFinite { row: usize, column: usize },
    #[error("label index out of range at row {row}: {axis} id {id}")]
    LabelOutOfRange { row: usize, axis: Axis, id: usize },
    #[error("embedding row count {embeddings} does not match label row count {labels}")]
    CountMismatch { labels: usize, embeddings: usize },
    #[error("dataset is empty (needs at least one row and one dimension)")]
    Empty,
    #[error("embedding dimensionality unknown: pass --dims or provide meta.json")]
    MissingDims,
    #[error("{path}: {message}")]
    Meta { path: String, message: String },
}

impl DatasetError {
    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            DatasetError::Io { .. } | DatasetError::Schema(SchemaError::Io { .. })
        )
    }
}

/// An `N × D` embedding matrix with one (descriptor, magnitude, pitch) label
/// per row. Immutable once constructed; construction validates every
/// invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDataset {
    embeddings: Matrix,
    labels: Vec<SampleLabel>,
    schema: LabelSchema,
    model_name: String,
}

impl LatentDataset {
    pub fn new(
        embeddings: Matrix,
        labels: Vec<SampleLabel>,
        schema: LabelSchema,
        model_name: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        if embeddings.rows() == 0 || embeddings.cols() == 0 {
            return Err(DatasetError::Empty);
        }
        if embeddings.rows() != labels.len() {
            return Err(DatasetError::CountMismatch {
                labels: labels.len(),
                embeddings: embeddings.rows(),
            });
        }
        for (i, row) in embeddings.iter_rows().enumerate() {
            if let Some(column) = row.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { row: i + 1, column });
            }
        }
        let bounds = [
            (Axis::Descriptor, schema.descriptors().len()),
            (Axis::Magnitude, schema.magnitudes().len()),
            (Axis::Pitch, schema.pitches().len()),
        ];
        for (i, label) in labels.iter().enumerate() {
            for (axis, len) in bounds {
                let id = label.get(axis);
                if id >= len {
                    return Err(DatasetError::LabelOutOfRange { row: i + 1, axis, id });
                }
            }
        }
        Ok(Self {
            embeddings,
            labels,
            schema,
            model_name: model_name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.embeddings.row(i)
    }

    pub fn labels(&self) -> &[SampleLabel] {
        &self.labels
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.schema
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn with_model_name(mut self, name: impl Into<String>) -> Self {
        self.model_name = name.into();
        self
    }

    /// Same labels with every embedding row replaced by `f(row)`. The
    /// output dimensionality may differ from the input.
    pub fn map_embeddings(&self, f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self, DatasetError> {
        Self::new(
            self.embeddings.map_rows(f),
            self.labels.clone(),
            self.schema.clone(),
            self.model_name.clone(),
        )
    }

    /// Label ids along one axis, in row order.
    pub fn axis_ids(&self, axis: Axis) -> Vec<usize> {
        self.labels.iter().map(|l| l.get(axis)).collect()
    }

    /// Number of rows per schema entry along `axis`.
    pub fn counts(&self, axis: Axis) -> Vec<usize> {
        let len = match axis {
            Axis::Descriptor => self.schema.descriptors().len(),
            Axis::Magnitude => self.schema.magnitudes().len(),
            Axis::Pitch => self.schema.pitches().len(),
        };
        let mut counts = vec![0; len];
        for l in &self.labels {
            counts[l.get(axis)] += 1;
        }
        counts
    }

    /// Human-readable name of a label id along `axis`.
    pub fn label_name(&self, axis: Axis, id: usize) -> String {
        match axis {
            Axis::Descriptor => self.schema.descriptors()[id].clone(),
            Axis::Magnitude => format!("{}%", self.schema.magnitude_percent(id)),
            Axis::Pitch => self.schema.pitches()[id].clone(),
        }
    }
}
