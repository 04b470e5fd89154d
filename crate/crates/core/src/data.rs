//! Dataset loading and construction.
//!
//! Supports IDX-format image/label files (the MNIST distribution format),
//! a two-class filter mapping digits {0, 1} to labels {-1, +1}, and seeded
//! synthetic two-cloud tasks for oracle-scale tests.

use std::path::Path;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Binary classification dataset with features in `[0,1]^{N x d}` and
/// labels in `{-1, +1}`.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<f64>,
    name: String,
}

impl Dataset {
    /// Validates the invariants and wraps the parts into a dataset.
    pub fn new(features: Array2<f64>, labels: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::Data(format!(
                "dataset must be non-empty, got {n}x{d}"
            )));
        }
        if labels.len() != n {
            return Err(Error::Consistency(format!(
                "feature rows ({n}) do not match label count ({})",
                labels.len()
            )));
        }
        if let Some(bad) = features.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Data(format!("feature value {bad} outside [0,1]")));
        }
        if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(Error::Data(format!("label {bad} is not -1 or +1")));
        }
        Ok(Dataset {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Number of samples N.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension d.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Appends a constant-1 feature column (opt-in intercept).
    pub fn with_bias_column(&self) -> Dataset {
        let (n, d) = self.features.dim();
        let mut features = Array2::<f64>::ones((n, d + 1));
        features
            .slice_mut(ndarray::s![.., ..d])
            .assign(&self.features);
        Dataset {
            features,
            labels: self.labels.clone(),
            name: format!("{}+bias", self.name),
        }
    }
}

/// Decoded IDX pair: normalized pixels plus the original class labels.
///
/// Class labels are kept as read (0-9 for MNIST) until a binary filter
/// assigns the {-1, +1} labels.
#[derive(Debug, Clone)]
pub struct LabeledImages {
    pub features: Array2<f64>,
    pub classes: Vec<u8>,
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset
        .checked_add(4)
        .ok_or_else(|| Error::Format("header offset overflow".into()))?;
    let slice = bytes
        .get(offset..end)
        .ok_or_else(|| Error::Format(format!("truncated header at byte {offset}")))?;
    Ok(u32::from_be_bytes(slice.try_into().unwrap()))
}

/// Raw IDX image payload.
#[derive(Debug, Clone)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

/// Parses an IDX image file (`0x00000803` magic, big-endian header).
pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = read_u32_be(bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )));
    }
    let count = read_u32_be(bytes, 4)? as u64;
    let rows = read_u32_be(bytes, 8)? as u64;
    let cols = read_u32_be(bytes, 12)? as u64;
    let payload = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
    let body = &bytes[16..];
    if (body.len() as u64) < payload {
        return Err(Error::io(
            "<idx images>",
            std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                format!("expected {payload} pixel bytes, found {}", body.len()),
            ),
        ));
    }
    if (body.len() as u64) > payload {
        return Err(Error::Format(format!(
            "trailing bytes after pixel data: expected {payload}, found {}",
            body.len()
        )));
    }
    Ok(IdxImages {
        count: count as usize,
        rows: rows as usize,
        cols: cols as usize,
        pixels: body.to_vec(),
    })
}

/// Parses an IDX label file (`0x00000801` magic, big-endian header).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32_be(bytes, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"
        )));
    }
    let count = read_u32_be(bytes, 4)? as u64;
    let body = &bytes[8..];
    if (body.len() as u64) < count {
        return Err(Error::io(
            "<idx labels>",
            std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                format!("expected {count} label bytes, found {}", body.len()),
            ),
        ));
    }
    if (body.len() as u64) > count {
        return Err(Error::Format(format!(
            "trailing bytes after label data: expected {count}, found {}",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

/// Decodes an in-memory IDX pair into normalized features plus class labels.
///
/// Pixels are divided by 255 into `[0,1]`; each image is flattened to
/// `d = rows x cols`.
pub fn decode_idx_pair(image_bytes: &[u8], label_bytes: &[u8]) -> Result<LabeledImages> {
    let images = parse_idx_images(image_bytes)?;
    let classes = parse_idx_labels(label_bytes)?;
    if images.count != classes.len() {
        return Err(Error::Consistency(format!(
            "image count {} does not match label count {}",
            images.count,
            classes.len()
        )));
    }
    if images.count == 0 {
        return Err(Error::Data("IDX pair contains zero samples".into()));
    }
    let d = images.rows * images.cols;
    if d == 0 {
        return Err(Error::Data("IDX images have zero pixels".into()));
    }
    let data: Vec<f64> = images.pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let features = Array2::from_shape_vec((images.count, d), data)
        .expect("shape checked against payload length");
    Ok(LabeledImages { features, classes })
}

/// Loads an IDX image/label file pair from disk.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledImages> {
    let image_bytes = std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let label_bytes = std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    decode_idx_pair(&image_bytes, &label_bytes)
}

/// Which half of the canonical MNIST file set to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Loads one MNIST split from a directory holding the four canonical files
/// (`train-images-idx3-ubyte`, `train-labels-idx1-ubyte`, `t10k-...`).
pub fn load_mnist_split(dir: &Path, split: Split) -> Result<LabeledImages> {
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    load_idx(
        &dir.join(format!("{prefix}-images-idx3-ubyte")),
        &dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

/// Keeps only digit classes 0 and 1, mapping digit 0 to label -1 and digit 1
/// to label +1 (fixed convention; the loss is symmetric under flipping both
/// labels and weights). Sample order is preserved.
pub fn filter_mnist2(full: &LabeledImages) -> Result<Dataset> {
    let keep: Vec<usize> = full
        .classes
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0 || c == 1)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::Data("no samples with class 0 or 1".into()));
    }
    let d = full.features.ncols();
    let mut features = Array2::<f64>::zeros((keep.len(), d));
    let mut labels = Vec::with_capacity(keep.len());
    for (row, &i) in keep.iter().enumerate() {
        features.row_mut(row).assign(&full.features.row(i));
        labels.push(if full.classes[i] == 0 { -1.0 } else { 1.0 });
    }
    Dataset::new(features, labels, "mnist2")
}

/// Two Gaussian clouds centred at `0.5 +/- margin * u` for the fixed unit
/// direction `u = (1,-1,1,-1,..)/sqrt(d)`, clipped into `[0,1]`.
/// Deterministic per seed; samples alternate between the +1 and -1 class.
///
/// The alternating direction keeps the class separation orthogonal to the
/// common `0.5` offset, so a bias-free linear model can separate the task.
pub fn synth_separable(n_per_class: usize, d: usize, margin: f64, seed: u64) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::Data(format!("synthetic task needs d >= 2, got {d}")));
    }
    if margin <= 0.0 {
        return Err(Error::Data(format!(
            "margin must be positive, got {margin}"
        )));
    }
    if n_per_class == 0 {
        return Err(Error::Data("n_per_class must be at least 1".into()));
    }
    const SIGMA: f64 = 0.05;
    let n = 2 * n_per_class;
    let shift = margin / (d as f64).sqrt();
    let mut features = Array2::<f64>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut rng = rng::stream(seed, i as u64);
        let mut row = features.row_mut(i);
        for j in 0..d {
            let u_j = if j % 2 == 0 { 1.0 } else { -1.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            row[j] = (0.5 + label * u_j * shift + SIGMA * z).clamp(0.0, 1.0);
        }
        labels.push(label);
    }
    Dataset::new(features, labels, format!("synth-m{margin}-s{seed}"))
}

/// Serializes features/classes back into IDX bytes. Used to build fixtures
/// (each image is a single row of `d` "pixels", values scaled by 255).
pub fn encode_idx_pair(features: &Array2<f64>, classes: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let (n, d) = features.dim();
    assert_eq!(n, classes.len());
    let mut images = Vec::with_capacity(16 + n * d);
    images.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    images.extend_from_slice(&(n as u32).to_be_bytes());
    images.extend_from_slice(&1u32.to_be_bytes());
    images.extend_from_slice(&(d as u32).to_be_bytes());
    images.extend(features.iter().map(|&v| (v * 255.0).round() as u8));
    let mut labels = Vec::with_capacity(8 + n);
    labels.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(n as u32).to_be_bytes());
    labels.extend_from_slice(classes);
    (images, labels)
}
