//! Label taxonomy shared by every dataset: timbre descriptors, effect
//! magnitude levels and pitches.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Descriptor names of the default taxonomy, in schema order.
pub const DEFAULT_DESCRIPTORS: [&str; 19] = [
    "airy", "boomy", "bright", "clean", "crunchy", "dark", "deep", "distorted", "fuzzy", "harsh",
    "hollow", "metallic", "muddy", "nasal", "rich", "sharp", "smooth", "thin", "warm",
];

/// Effect magnitude levels of the default taxonomy (25%, 50%, 75%, 100%).
pub const DEFAULT_MAGNITUDES: [f64; 4] = [0.25, 0.50, 0.75, 1.00];

const PITCH_CLASSES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema {axis} list is empty")]
    Empty { axis: &'static str },
    #[error("schema {axis} list contains duplicate entry {value:?}")]
    Duplicate { axis: &'static str, value: String },
    #[error("schema magnitudes must lie in (0, 1] and be strictly increasing (offending value {value})")]
    BadMagnitude { value: f64 },
    #[error("two schema magnitudes map to the same percent label {percent}")]
    AmbiguousPercent { percent: u32 },
    #[error("failed to read schema file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed schema file {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Ordered label vocabularies. Label ids stored in a dataset are indices into
/// these lists, so the list order is the canonical order of every breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct LabelSchema {
    descriptors: Vec<String>,
    magnitudes: Vec<f64>,
    pitches: Vec<String>,
}

#[derive(Deserialize)]
struct RawSchema {
    descriptors: Vec<String>,
    magnitudes: Vec<f64>,
    pitches: Vec<String>,
}

impl TryFrom<RawSchema> for LabelSchema {
    type Error = SchemaError;

    fn try_from(raw: RawSchema) -> Result<Self, Self::Error> {
        LabelSchema::new(raw.descriptors, raw.magnitudes, raw.pitches)
    }
}

impl Default for LabelSchema {
    fn default() -> Self {
        Self {
            descriptors: DEFAULT_DESCRIPTORS.iter().map(|s| s.to_string()).collect(),
            magnitudes: DEFAULT_MAGNITUDES.to_vec(),
            pitches: chromatic_range(4, 4, 2, 6),
        }
    }
}

impl LabelSchema {
    pub fn new(
        descriptors: Vec<String>,
        magnitudes: Vec<f64>,
        pitches: Vec<String>,
    ) -> Result<Self, SchemaError> {
        check_names("descriptor", &descriptors)?;
        check_names("pitch", &pitches)?;
        if magnitudes.is_empty() {
            return Err(SchemaError::Empty { axis: "magnitude" });
        }
        let mut prev = 0.0;
        for &m in &magnitudes {
            if !(m > prev && m <= 1.0) {
                return Err(SchemaError::BadMagnitude { value: m });
            }
            prev = m;
        }
        let mut seen = HashSet::new();
        for &m in &magnitudes {
            let percent = percent_of(m);
            if !seen.insert(percent) {
                return Err(SchemaError::AmbiguousPercent { percent });
            }
        }
        Ok(Self {
            descriptors,
            magnitudes,
            pitches,
        })
    }

    /// Reads a JSON schema file of the form
    /// `{"descriptors":[...],"magnitudes":[...],"pitches":[...]}`.
    pub fn from_json_file(path: &Path) -> Result<Self, SchemaError> {
        let text = fs::read_to_string(path).map_err(|source| SchemaError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| SchemaError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn descriptors(&self) -> &[String] {
        &self.descriptors
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn pitches(&self) -> &[String] {
        &self.pitches
    }

    pub fn descriptor_id(&self, name: &str) -> Option<usize> {
        self.descriptors.iter().position(|d| d == name)
    }

    pub fn pitch_id(&self, name: &str) -> Option<usize> {
        self.pitches.iter().position(|p| p == name)
    }

    /// Maps a percent label such as `75` to its magnitude index.
    pub fn magnitude_id_for_percent(&self, percent: u32) -> Option<usize> {
        self.magnitudes.iter().position(|&m| percent_of(m) == percent)
    }

    pub fn magnitude_percent(&self, magnitude_id: usize) -> u32 {
        percent_of(self.magnitudes[magnitude_id])
    }
}

fn percent_of(level: f64) -> u32 {
    (level * 100.0).round() as u32
}

fn check_names(axis: &'static str, names: &[String]) -> Result<(), SchemaError> {
    if names.is_empty() {
        return Err(SchemaError::Empty { axis });
    }
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(SchemaError::Duplicate {
                axis,
                value: name.clone(),
            });
        }
    }
    Ok(())
}

/// Chromatic pitch names from `start` to `end` inclusive, with pitch classes
/// given as semitone offsets from C (so E4 is `(4, 4)`).
fn chromatic_range(start_class: usize, start_octave: i32, end_class: usize, end_octave: i32) -> Vec<String> {
    let first = start_octave * 12 + start_class as i32;
    let last = end_octave * 12 + end_class as i32;
    (first..=last)
        .map(|midi| {
            let class = PITCH_CLASSES[midi.rem_euclid(12) as usize];
            format!("{}{}", class, midi.div_euclid(12))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_shape() {
        let s = LabelSchema::default();
        assert_eq!(s.descriptors().len(), 19);
        assert_eq!(s.magnitudes(), &[0.25, 0.5, 0.75, 1.0]);
        assert_eq!(s.pitches().len(), 23);
        assert_eq!(s.pitches().first().unwrap(), "E4");
        assert_eq!(s.pitches().last().unwrap(), "D6");
        assert_eq!(s.pitches()[8], "C5");
        // Revalidates through the checked constructor.
        LabelSchema::new(
            s.descriptors().to_vec(),
            s.magnitudes().to_vec(),
            s.pitches().to_vec(),
        )
        .unwrap();
    }

    #[test]
    fn percent_lookup() {
        let s = LabelSchema::default();
        assert_eq!(s.magnitude_id_for_percent(25), Some(0));
        assert_eq!(s.magnitude_id_for_percent(100), Some(3));
        assert_eq!(s.magnitude_id_for_percent(30), None);
        assert_eq!(s.magnitude_percent(2), 75);
    }

    #[test]
    fn rejects_bad_schemas() {
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(matches!(
            LabelSchema::new(vec![], vec![1.0], names(&["A4"])),
            Err(SchemaError::Empty { .. })
        ));
        assert!(matches!(
            LabelSchema::new(names(&["a", "a"]), vec![1.0], names(&["A4"])),
            Err(SchemaError::Duplicate { .. })
        ));
        assert!(matches!(
            LabelSchema::new(names(&["a"]), vec![0.5, 0.5], names(&["A4"])),
            Err(SchemaError::BadMagnitude { .. })
        ));
        assert!(matches!(
            LabelSchema::new(names(&["a"]), vec![0.0, 0.5], names(&["A4"])),
            Err(SchemaError::BadMagnitude { .. })
        ));
        assert!(matches!(
            LabelSchema::new(names(&["a"]), vec![0.5, 1.5], names(&["A4"])),
            Err(SchemaError::BadMagnitude { .. })
        ));
        assert!(matches!(
            LabelSchema::new(names(&["a"]), vec![0.501, 0.502], names(&["A4"])),
            Err(SchemaError::AmbiguousPercent { .. })
        ));
    }

    #[test]
    fn json_validation_runs_on_deserialize() {
        let bad = r#"{"descriptors":["a"],"magnitudes":[0.75,0.25],"pitches":["C4"]}"#;
        assert!(serde_json::from_str::<LabelSchema>(bad).is_err());
        let good = r#"{"descriptors":["a","b"],"magnitudes":[0.5,1.0],"pitches":["C4"]}"#;
        let s: LabelSchema = serde_json::from_str(good).unwrap();
        assert_eq!(s.descriptor_id("b"), Some(1));
    }
}
