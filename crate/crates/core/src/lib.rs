//! Multi-scale, multi-task convolutional classifier for food attributes.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: a small dense tensor type with reverse-mode differentiation and
//!   exactly the forward operations the network needs.
//! - [`arch`]: the layer stack (dual-kernel stem with learned aggregation,
//!   bottleneck stages, pyramid pooling, two classification heads), shape
//!   tracing and checkpoint persistence.
//! - [`objective`]: frequency-weighted cross-entropy, the joint multi-task
//!   loss and precision/recall/F1 reporting.
//! - [`data`]: manifests, flavor reduction, stratified splitting, PPM image
//!   I/O, augmentation and a synthetic dataset generator.
//! - [`train`]: Adam, the poly learning-rate policy, the epoch loop and
//!   evaluation.
//! - [`run_config`]: the flat `key = value` run configuration.

pub mod arch;
pub mod data;
pub mod objective;
pub mod rng;
pub mod run_config;
pub mod tensor;
pub mod train;

pub use arch::{Model, ModelConfig};
pub use tensor::{Element, Mode, Tensor, TensorError};
