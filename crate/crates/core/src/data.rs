//! CSV datasets, the dataset manifest and stratified train/test splits.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let name = name.into();
        let invalid = |message: String| Error::Dataset {
            path: PathBuf::from(&name),
            message,
        };
        if features.len() != labels.len() {
            return Err(invalid(format!("{} rows but {} labels", features.len(), labels.len())));
        }
        if features.len() < 2 {
            return Err(invalid("at least two instances are required".into()));
        }
        let n = features[0].len();
        if n == 0 || features.iter().any(|row| row.len() != n) {
            return Err(invalid("rows must share a non-zero feature count".into()));
        }
        for class in 0..=1u8 {
            if !labels.contains(&class) {
                return Err(Error::EmptyClass(class as usize));
            }
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(invalid("labels must be 0 or 1".into()));
        }
        Ok(Dataset { name, features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features[0].len()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.len() - ones, ones]
    }

    /// Rows and labels restricted to `indices`.
    pub fn subset(&self, indices: &[usize]) -> (Vec<&[f64]>, Vec<u8>) {
        indices.iter().map(|&i| (self.features[i].as_slice(), self.labels[i])).unzip()
    }
}

/// Load a headed CSV. The label column becomes 1 where it equals
/// `positive_label` and 0 where it equals the one other value present;
/// every other column must be numeric.
pub fn load_dataset(path: impl AsRef<Path>, label_column: &str, positive_label: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let err = |message: String| Error::Dataset {
        path: path.to_path_buf(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| err(format!("no column named `{label_column}`")))?;

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    let mut negative: Option<String> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut values = Vec::with_capacity(record.len().saturating_sub(1));
        for (col, field) in record.iter().enumerate() {
            if col == label_at {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| err(format!("row {}: column `{}` is not numeric: `{field}`", row + 1, &headers[col])))?;
            values.push(v);
        }
        let label = &record[label_at];
        let class = if label == positive_label {
            1
        } else {
            match &negative {
                Some(n) if n != label => {
                    return Err(err(format!("row {}: unknown label `{label}`", row + 1)));
                }
                Some(_) => 0,
                None => {
                    negative = Some(label.to_string());
                    0
                }
            }
        };
        features.push(values);
        raw_labels.push(class);
    }
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Dataset::new(name, features, raw_labels).map_err(|e| match e {
        Error::Dataset { message, .. } => err(message),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label_column: String,
    pub positive_label: String,
}

/// Dataset names mapped to their files; paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    root: PathBuf,
    entries: BTreeMap<String, ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: BTreeMap<String, ManifestEntry> = toml::from_str(&text).map_err(|e| Error::Dataset {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Manifest {
            root: path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            entries,
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entry(&self, name: &str) -> Option<&ManifestEntry> {
        self.entries.get(name)
    }

    pub fn path_of(&self, name: &str) -> Option<PathBuf> {
        self.entry(name).map(|e| self.root.join(&e.path))
    }

    pub fn load_dataset(&self, name: &str) -> Result<Dataset> {
        let entry = self
            .entry(name)
            .ok_or_else(|| Error::InvalidArgument(format!("dataset `{name}` is not in the manifest")))?;
        let mut data = load_dataset(self.root.join(&entry.path), &entry.label_column, &entry.positive_label)?;
        data.name = name.to_string();
        Ok(data)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per class, shuffle with the seed and send `round(train_fraction * count)`
/// instances to training, the rest to test. Both lists are sorted.
pub fn stratified_split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for class in 0..=1u8 {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] == class).collect();
        if members.is_empty() {
            return Err(Error::EmptyClass(class as usize));
        }
        members.shuffle(&mut rng);
        let k = (train_fraction * members.len() as f64).round() as usize;
        split.train.extend_from_slice(&members[..k]);
        split.test.extend_from_slice(&members[k..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
