//! Dataset manifests, label vocabularies, splitting, image I/O, augmentation
//! and the synthetic dataset generator.

mod augment;
mod image;
mod manifest;
mod split;
mod synth;
mod vocab;

use std::path::{Path, PathBuf};

pub use augment::{augment, hflip, rotate, AugmentDraw, CROP_SCALE, FLIP_P, MAX_ANGLE_DEG};
pub use image::{batch_tensor, decode_ppm, encode_ppm, load_image, read_ppm, write_ppm, Image};
pub use manifest::{parse_manifest, DatasetManifest, LabelCounts, Sample, Split};
pub use split::{split_sizes, stratified_split, DEFAULT_FRACTIONS};
pub use synth::{render_sample, synth_dataset, synth_dataset_with, SynthOptions, DEFAULT_SYNTH_SIZE, MANIFEST_NAME};
pub use vocab::{cuisine_index, flavor_index, reduce_flavor, reduce_flavor_named, CUISINES, FLAVORS};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown {kind} {label:?}")]
    UnknownLabel {
        line: usize,
        kind: &'static str,
        label: String,
    },
    #[error("line {line}: score {score} for {flavor} outside [0, 1]")]
    ScoreRange { line: usize, flavor: String, score: f64 },
    #[error("flavor scores are empty")]
    EmptyScores,
    #[error("split fractions {0:?} must be in [0, 1] and sum to 1")]
    Fractions([f64; 3]),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated image: {0}")]
    Truncated(String),
    #[error("{path}: {inner}")]
    InFile { path: PathBuf, inner: Box<DataError> },
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn at_path(self, path: &Path) -> Self {
        DataError::InFile {
            path: path.to_path_buf(),
            inner: Box::new(self),
        }
    }

    /// True for failures of the file system rather than of the content.
    pub fn is_io(&self) -> bool {
        match self {
            DataError::Io { .. } => true,
            DataError::InFile { inner, .. } => inner.is_io(),
            _ => false,
        }
    }
}
