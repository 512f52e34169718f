use super::{expect_dim, expect_rank};
use crate::tensor::{Element, Mode, Result, Tensor, TensorError};

/// Per-channel running mean and variance of a batch-norm layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats<T: Element> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Element> RunningStats<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
        }
    }
}

/// Batch normalization over `(n, h, w)` per channel followed by the
/// `gamma`/`beta` affine map.
///
/// Train mode normalizes with the biased batch statistics and blends them
/// into `stats` with weight `momentum`; eval mode normalizes with `stats`.
#[allow(clippy::too_many_arguments)]
pub fn batch_norm2d<T: Element>(
    input: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    stats: &mut RunningStats<T>,
    mode: Mode,
    eps: f64,
    momentum: f64,
) -> Result<Tensor<T>> {
    const OP: &str = "batch_norm2d";
    expect_rank(OP, input, 4)?;
    let [n, c, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    expect_dim(OP, "gamma length", c, gamma.numel())?;
    expect_dim(OP, "beta length", c, beta.numel())?;
    expect_dim(OP, "running stats length", c, stats.mean.len())?;
    let hw = h * w;
    let m = n * hw;
    if mode == Mode::Train && m < 2 {
        return Err(TensorError::InvalidArgument {
            op: OP,
            message: "train mode needs at least two values per channel to estimate variance".into(),
        });
    }

    let x = input.data();
    let (gv, bv) = (gamma.to_vec(), beta.to_vec());
    let eps_t = T::of(eps);
    let mut inv_std = vec![T::zero(); c];
    let mut xhat = vec![T::zero(); x.len()];
    let mut out = vec![T::zero(); x.len()];
    let inv_m = T::one() / T::of(m as f64);
    for ch in 0..c {
        let (mean, var) = match mode {
            Mode::Train => {
                let mut sum = T::zero();
                for s in 0..n {
                    sum += x[(s * c + ch) * hw..(s * c + ch + 1) * hw].iter().copied().sum();
                }
                let mean = sum * inv_m;
                let mut sq = T::zero();
                for s in 0..n {
                    for &v in &x[(s * c + ch) * hw..(s * c + ch + 1) * hw] {
                        sq += (v - mean) * (v - mean);
                    }
                }
                let var = sq * inv_m;
                let mom = T::of(momentum);
                stats.mean[ch] = (T::one() - mom) * stats.mean[ch] + mom * mean;
                stats.var[ch] = (T::one() - mom) * stats.var[ch] + mom * var;
                (mean, var)
            }
            Mode::Eval => (stats.mean[ch], stats.var[ch]),
        };
        let is = T::one() / (var + eps_t).sqrt();
        inv_std[ch] = is;
        for s in 0..n {
            let range = (s * c + ch) * hw..(s * c + ch + 1) * hw;
            for i in range {
                let xh = (x[i] - mean) * is;
                xhat[i] = xh;
                out[i] = gv[ch] * xh + bv[ch];
            }
        }
    }
    drop(x);

    let need_dx = input.requires_grad();
    Tensor::from_op(
        OP,
        input.shape().to_vec(),
        out,
        vec![input.clone(), gamma.clone(), beta.clone()],
        move |_, g| {
            let mut dgamma = vec![T::zero(); c];
            let mut dbeta = vec![T::zero(); c];
            for ch in 0..c {
                for s in 0..n {
                    for i in (s * c + ch) * hw..(s * c + ch + 1) * hw {
                        dbeta[ch] += g[i];
                        dgamma[ch] += g[i] * xhat[i];
                    }
                }
            }
            let dx = need_dx.then(|| {
                let mut dx = vec![T::zero(); g.len()];
                for ch in 0..c {
                    let scale = gv[ch] * inv_std[ch];
                    for s in 0..n {
                        for i in (s * c + ch) * hw..(s * c + ch + 1) * hw {
                            dx[i] = match mode {
                                // dx = γ/σ · (g − mean(g) − x̂·mean(g·x̂))
                                Mode::Train => scale * (g[i] - dbeta[ch] * inv_m - xhat[i] * dgamma[ch] * inv_m),
                                Mode::Eval => scale * g[i],
                            };
                        }
                    }
                }
                dx
            });
            vec![dx, Some(dgamma), Some(dbeta)]
        },
    )
}
