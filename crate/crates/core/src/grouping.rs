//! Partitioning dataset rows by label axes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Axis, LatentDataset};

/// A grouping key: the label ids along the grouped axes, `None` elsewhere.
/// Ordering follows schema index order (descriptor, then magnitude, then
/// pitch).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch: Option<usize>,
}

impl GroupKey {
    pub fn descriptor(id: usize) -> Self {
        Self {
            descriptor: Some(id),
            ..Self::default()
        }
    }

    pub fn pitch(id: usize) -> Self {
        Self {
            pitch: Some(id),
            ..Self::default()
        }
    }

    /// Renders the key with schema names, e.g. `bright/75%/E4`.
    pub fn display(&self, ds: &LatentDataset) -> String {
        let parts: Vec<String> = [
            (Axis::Descriptor, self.descriptor),
            (Axis::Magnitude, self.magnitude),
            (Axis::Pitch, self.pitch),
        ]
        .into_iter()
        .filter_map(|(axis, id)| id.map(|id| ds.label_name(axis, id)))
        .collect();
        if parts.is_empty() {
            "all".to_string()
        } else {
            parts.join("/")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupIndex {
    pub key: GroupKey,
    /// Sorted, unique row indices.
    pub member_rows: Vec<usize>,
}

/// Partitions the rows of `ds` by the given axes. Empty groups are omitted;
/// groups come back in schema index order of their key. With no axes, all
/// rows form one group.
pub fn group_by(ds: &LatentDataset, axes: &[Axis]) -> Vec<GroupIndex> {
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for (row, label) in ds.labels().iter().enumerate() {
        let mut key = GroupKey::default();
        for &axis in axes {
            let id = Some(label.get(axis));
            match axis {
                Axis::Descriptor => key.descriptor = id,
                Axis::Magnitude => key.magnitude = id,
                Axis::Pitch => key.pitch = id,
            }
        }
        groups.entry(key).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|(key, member_rows)| GroupIndex { key, member_rows })
        .collect()
}
