//! Differentiable forward operations.
//!
//! Every op validates shapes, rejects non-finite results and, when an input is
//! tracked, records a backward closure. Layouts are row-major `n×c×h×w` for
//! feature maps and `n×d` for dense activations.

mod basic;
mod conv;
mod linear;
mod norm;
mod pool;
mod softmax;

pub use basic::{add, concat_channels, dropout, exp, mul_const, mul_scalar, relu, reshape, select, sum};
pub use conv::{conv2d, ConvParams};
pub use linear::linear;
pub use norm::{batch_norm2d, RunningStats};
pub(crate) use pool::corner_aligned_taps;
pub use pool::{adaptive_avg_pool2d, adaptive_bin, bilinear_upsample};
pub use softmax::{log_softmax, nll_weighted};

use super::{Element, Result, Tensor, TensorError};

pub(crate) fn expect_rank<T: Element>(op: &'static str, t: &Tensor<T>, rank: usize) -> Result<()> {
    if t.rank() != rank {
        return Err(TensorError::Rank {
            op,
            expected: rank,
            shape: t.shape().to_vec(),
        });
    }
    Ok(())
}

pub(crate) fn expect_dim(op: &'static str, dim: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(TensorError::DimMismatch {
            op,
            dim,
            expected,
            actual,
        });
    }
    Ok(())
}
