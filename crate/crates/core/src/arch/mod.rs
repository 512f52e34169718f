//! The multi-scale, two-headed classification network.
//!
//! Layout (reference widths, 224 input):
//!
//! | block      | layers                                                   | output         |
//! |------------|----------------------------------------------------------|----------------|
//! | stem       | 5×5 ∥ 7×7 → weighted sum → 1×1/2 → 3×3 ∥ 5×5 → weighted sum → 1×1 | 64×112×112 |
//! | residual   | four bottleneck stages (3, 4, 6, 3 units)                | 2048×14×14     |
//! | pyramid    | pool to 1,2,3,6 → 1×1 conv → upsample → concat           | 4096×14×14     |
//! | conv-pool  | 3×3 → 3×3 → dropout → global average                     | 1024           |
//! | heads      | cuisine 256→C→C, flavor 512→128→F→F                      | C, F           |
//!
//! Every convolution is followed by batch norm (and ReLU except before a
//! residual addition). [`ModelConfig::width`] scales all channel counts.

pub mod checkpoint;
mod config;
mod model;
pub mod plan;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_with_config, save_checkpoint, CheckpointError, NamedArray, OptimizerSnapshot,
};
pub use config::{ModelConfig, WidthMultiplier, MODEL_KEYS};
pub use model::{HeadKind, HeadLogits, Model};
pub use plan::{render_trace, shape_trace, Plan, TraceRow};

use crate::tensor::TensorError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArchError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Builds a model with freshly initialized parameters.
pub fn build_model<T: crate::Element>(config: &ModelConfig, seed: u64) -> Result<Model<T>, ArchError> {
    Model::new(config, seed)
}
