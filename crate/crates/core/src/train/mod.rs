//! Optimization: Adam, the poly learning-rate policy, the epoch loop and
//! evaluation.

mod adam;
mod dataset;
mod eval;
mod schedule;
mod trainer;

pub use adam::{adam_step, AdamParams, OptimizerState};
pub use dataset::{parallel_map, ImageSet};
pub use eval::{evaluate, predict, Prediction};
pub use schedule::{batches_per_epoch, max_iterations, poly_lr};
pub use trainer::{checkpoint_name, fit, BatchRecord, EpochSummary, FitResult, Trainer, LOG_HEADER};

use crate::arch::{ArchError, CheckpointError};
use crate::data::DataError;
use crate::objective::ObjectiveError;
use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("empty split: no {0} samples")]
    EmptySplit(String),
    #[error(
        "non-finite value at epoch {epoch}, batch {batch} (iteration {iteration}): {detail}; task losses {losses:?}"
    )]
    NonFinite {
        epoch: usize,
        batch: usize,
        iteration: u64,
        detail: String,
        losses: Vec<(String, f64)>,
    },
    #[error("parameter #{0} has no gradient")]
    MissingGradient(usize),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TrainError {
    /// The tensor-level non-finite failure buried in this error, if any.
    pub(crate) fn non_finite_op(&self) -> Option<&'static str> {
        match self {
            TrainError::Tensor(TensorError::NonFinite { op })
            | TrainError::Arch(ArchError::Tensor(TensorError::NonFinite { op }))
            | TrainError::Objective(ObjectiveError::Tensor(TensorError::NonFinite { op })) => Some(op),
            _ => None,
        }
    }
}

/// Optimization hyperparameters and run bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub base_lr: f64,
    pub poly_power: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamParams,
    pub seed: u64,
    /// Loss weights of the cuisine and flavor tasks.
    pub alphas: [f64; 2],
    /// Save a checkpoint every this many epochs (0: final epoch only).
    pub checkpoint_every: usize,
    /// Evaluate the validation split every this many epochs (0: final only).
    pub eval_every: usize,
    pub augment: bool,
    /// Threads for image decoding and augmentation.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            base_lr: 0.001,
            poly_power: 0.9,
            batch_size: 16,
            epochs: 100,
            adam: AdamParams::default(),
            seed: 0,
            alphas: [1.0, 1.0],
            checkpoint_every: 0,
            eval_every: 0,
            augment: true,
            workers: 1,
        }
    }
}

pub const TRAIN_KEYS: [&str; 14] = [
    "base_lr",
    "poly_power",
    "batch_size",
    "epochs",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "seed",
    "alpha_cuisine",
    "alpha_flavor",
    "checkpoint_every",
    "eval_every",
    "augment",
    "workers",
];

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad("base_lr must be positive");
        }
        if !(self.poly_power > 0.0 && self.poly_power.is_finite()) {
            return bad("poly_power must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        let AdamParams { beta1, beta2, eps } = self.adam;
        if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
            return bad("adam betas must lie in [0, 1) and eps must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), TrainError> {
        let value = value.trim();
        fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V, TrainError> {
            value
                .parse()
                .map_err(|_| TrainError::Config(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "base_lr" => self.base_lr = parse(key, value)?,
            "poly_power" => self.poly_power = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "adam_beta1" => self.adam.beta1 = parse(key, value)?,
            "adam_beta2" => self.adam.beta2 = parse(key, value)?,
            "adam_eps" => self.adam.eps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "alpha_cuisine" => self.alphas[0] = parse(key, value)?,
            "alpha_flavor" => self.alphas[1] = parse(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            "eval_every" => self.eval_every = parse(key, value)?,
            "augment" => self.augment = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            _ => return Err(TrainError::Config(format!("unknown training key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("base_lr", format!("{:?}", self.base_lr)),
            ("poly_power", format!("{:?}", self.poly_power)),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("adam_beta1", format!("{:?}", self.adam.beta1)),
            ("adam_beta2", format!("{:?}", self.adam.beta2)),
            ("adam_eps", format!("{:?}", self.adam.eps)),
            ("seed", self.seed.to_string()),
            ("alpha_cuisine", format!("{:?}", self.alphas[0])),
            ("alpha_flavor", format!("{:?}", self.alphas[1])),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("augment", self.augment.to_string()),
            ("workers", self.workers.to_string()),
        ]
    }
}
