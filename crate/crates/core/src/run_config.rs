//! Flat `key = value` run configuration covering the model, the optimizer
//! and dataset paths. Every key has a default; unknown keys are errors.
//!
//! ```text
//! # desk-scale run
//! manifest = data/manifest.tsv
//! out_dir = runs/a
//! width_multiplier = 1/8
//! input_size = 64
//! pool_scales = 1,2,3,4
//! epochs = 200
//! ```

use std::path::{Path, PathBuf};

use crate::arch::{ModelConfig, MODEL_KEYS};
use crate::train::{TrainConfig, TRAIN_KEYS};

pub const PATH_KEYS: [&str; 2] = ["manifest", "out_dir"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", match .line { Some(l) => format!("line {l}: "), None => String::new() })]
pub struct ConfigError {
    pub line: Option<usize>,
    /// The offending key, when known.
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: key.map(str::to_string),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Dataset manifest; required for training and evaluation.
    pub manifest: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            manifest: None,
            out_dir: PathBuf::from("run"),
        }
    }
}

impl RunConfig {
    pub fn keys() -> impl Iterator<Item = &'static str> {
        PATH_KEYS.into_iter().chain(MODEL_KEYS).chain(TRAIN_KEYS)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "manifest" => self.manifest = (!value.is_empty()).then(|| PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            k if MODEL_KEYS.contains(&k) => self
                .model
                .set(k, value)
                .map_err(|e| ConfigError::new(Some(k), e.to_string()))?,
            k if TRAIN_KEYS.contains(&k) => self
                .train
                .set(k, value)
                .map_err(|e| ConfigError::new(Some(k), e.to_string()))?,
            k => return Err(ConfigError::new(Some(k), format!("unknown key {k:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of the current values.
    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |mut e: ConfigError| {
                e.line = Some(i + 1);
                e
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| at(ConfigError::new(None, format!("expected key = value, found {line:?}"))))?;
            self.set(k.trim(), v).map_err(at)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    /// Applies a single `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::new(None, format!("override {assignment:?} is not key=value")))?;
        self.set(k.trim(), v)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model
            .validate()
            .map_err(|e| ConfigError::new(None, e.to_string()))?;
        self.train.validate().map_err(|e| ConfigError::new(None, e.to_string()))
    }

    /// Makes relative paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(m) = &self.manifest {
            if m.is_relative() {
                self.manifest = Some(base.join(m));
            }
        }
        if self.out_dir.is_relative() {
            self.out_dir = base.join(&self.out_dir);
        }
    }

    pub fn require_manifest(&self) -> Result<&Path, ConfigError> {
        self.manifest
            .as_deref()
            .ok_or_else(|| ConfigError::new(Some("manifest"), "missing required key \"manifest\""))
    }

    /// Every key with its resolved value, in [`RunConfig::keys`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let manifest = self
            .manifest
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        out.push_str(&format!("manifest = {manifest}\n"));
        out.push_str(&format!("out_dir = {}\n", self.out_dir.display()));
        for (k, v) in self.model.to_kv().into_iter().chain(self.train.to_kv()) {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
