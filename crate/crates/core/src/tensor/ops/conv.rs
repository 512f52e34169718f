use super::{expect_dim, expect_rank};
use crate::tensor::{gemm, Element, Result, Tensor, TensorError};

/// Geometry of a square-kernel 2-D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvParams {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        }
    }

    /// `floor((len + 2P - K) / S) + 1`, or `None` when the padded input is
    /// smaller than the kernel or the stride is zero.
    pub fn output_len(&self, len: usize) -> Option<usize> {
        let padded = len + 2 * self.padding;
        if self.stride == 0 || self.kernel == 0 || padded < self.kernel {
            return None;
        }
        Some((padded - self.kernel) / self.stride + 1)
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [self.out_channels, self.in_channels, self.kernel, self.kernel]
    }
}

struct Geometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl Geometry {
    fn cols(&self) -> usize {
        self.n * self.ho * self.wo
    }

    fn rows(&self) -> usize {
        self.c * self.k * self.k
    }

    /// Valid output columns `[lo, hi)` for kernel offset `kx`.
    fn ox_range(&self, kx: usize) -> (usize, usize) {
        let (s, p) = (self.stride, self.pad);
        // ix = ox*s + kx - p must lie in [0, w)
        let lo = if kx >= p { 0 } else { (p - kx).div_ceil(s) };
        let hi = if self.w + p > kx {
            ((self.w + p - kx - 1) / s + 1).min(self.wo)
        } else {
            0
        };
        (lo.min(hi), hi)
    }
}

/// Unfolds the zero-padded input into a `(c·K·K) × (n·ho·wo)` matrix.
fn im2col<T: Element>(x: &[T], g: &Geometry, col: &mut [T]) {
    let cols = g.cols();
    let hw_out = g.ho * g.wo;
    for ci in 0..g.c {
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let dst_row = &mut col[row * cols..(row + 1) * cols];
                let (lo, hi) = g.ox_range(kx);
                for s in 0..g.n {
                    let plane = &x[(s * g.c + ci) * g.h * g.w..(s * g.c + ci + 1) * g.h * g.w];
                    for oy in 0..g.ho {
                        let dst = &mut dst_row[s * hw_out + oy * g.wo..s * hw_out + (oy + 1) * g.wo];
                        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                        if iy < 0 || iy >= g.h as isize {
                            dst.fill(T::zero());
                            continue;
                        }
                        let src = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                        dst[..lo].fill(T::zero());
                        dst[hi..].fill(T::zero());
                        if g.stride == 1 {
                            let start = lo + kx - g.pad;
                            dst[lo..hi].copy_from_slice(&src[start..start + (hi - lo)]);
                        } else {
                            for ox in lo..hi {
                                dst[ox] = src[ox * g.stride + kx - g.pad];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters column gradients back onto the input.
fn col2im<T: Element>(col: &[T], g: &Geometry, dx: &mut [T]) {
    let cols = g.cols();
    let hw_out = g.ho * g.wo;
    for ci in 0..g.c {
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let src_row = &col[row * cols..(row + 1) * cols];
                let (lo, hi) = g.ox_range(kx);
                for s in 0..g.n {
                    let plane = &mut dx[(s * g.c + ci) * g.h * g.w..(s * g.c + ci + 1) * g.h * g.w];
                    for oy in 0..g.ho {
                        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        let src = &src_row[s * hw_out + oy * g.wo..s * hw_out + (oy + 1) * g.wo];
                        let dst = &mut plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                        for ox in lo..hi {
                            dst[ox * g.stride + kx - g.pad] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

/// Cross-correlation of the zero-padded `n×c_in×h×w` input with a
/// `c_out×c_in×K×K` kernel, plus an optional per-channel bias.
pub fn conv2d<T: Element>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    params: ConvParams,
) -> Result<Tensor<T>> {
    const OP: &str = "conv2d";
    expect_rank(OP, input, 4)?;
    expect_rank(OP, weight, 4)?;
    if params.stride == 0 {
        return Err(TensorError::InvalidArgument {
            op: OP,
            message: "stride must be at least 1".into(),
        });
    }
    let [n, c, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    expect_dim(OP, "input channels", params.in_channels, c)?;
    let ws = params.weight_shape();
    expect_dim(OP, "weight out_channels", ws[0], weight.shape()[0])?;
    expect_dim(OP, "weight in_channels", ws[1], weight.shape()[1])?;
    expect_dim(OP, "weight kernel height", ws[2], weight.shape()[2])?;
    expect_dim(OP, "weight kernel width", ws[3], weight.shape()[3])?;
    if let Some(b) = bias {
        expect_rank(OP, b, 1)?;
        expect_dim(OP, "bias length", params.out_channels, b.shape()[0])?;
    }
    let too_small = || TensorError::InvalidArgument {
        op: OP,
        message: format!(
            "input {h}x{w} with padding {} is smaller than kernel {}",
            params.padding, params.kernel
        ),
    };
    let ho = params.output_len(h).ok_or_else(too_small)?;
    let wo = params.output_len(w).ok_or_else(too_small)?;
    let geo = Geometry {
        n,
        c,
        h,
        w,
        k: params.kernel,
        stride: params.stride,
        pad: params.padding,
        ho,
        wo,
    };
    let co = params.out_channels;
    let (rows, cols, hw_out) = (geo.rows(), geo.cols(), ho * wo);

    let mut col = vec![T::zero(); rows * cols];
    im2col(&input.data(), &geo, &mut col);
    let mut out_mat = vec![T::zero(); co * cols];
    gemm(
        false,
        false,
        co,
        cols,
        rows,
        T::one(),
        &weight.data(),
        &col,
        T::zero(),
        &mut out_mat,
    );
    drop(col);

    let bias_vals = bias.map(|b| b.to_vec());
    let mut out = vec![T::zero(); n * co * hw_out];
    for s in 0..n {
        for oc in 0..co {
            let b = bias_vals.as_ref().map_or(T::zero(), |bv| bv[oc]);
            let src = &out_mat[oc * cols + s * hw_out..oc * cols + (s + 1) * hw_out];
            let dst = &mut out[(s * co + oc) * hw_out..(s * co + oc + 1) * hw_out];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = v + b;
            }
        }
    }
    drop(out_mat);

    let mut inputs = vec![input.clone(), weight.clone()];
    if let Some(b) = bias {
        inputs.push(b.clone());
    }
    let need_dx = input.requires_grad();
    let need_dw = weight.requires_grad();
    let has_bias = bias.is_some();
    let (x, wt) = (input.clone(), weight.clone());
    Tensor::from_op(OP, vec![n, co, ho, wo], out, inputs, move |_, g| {
        // gradient as a co × (n·ho·wo) matrix
        let mut g_mat = vec![T::zero(); co * cols];
        for s in 0..n {
            for oc in 0..co {
                g_mat[oc * cols + s * hw_out..oc * cols + (s + 1) * hw_out]
                    .copy_from_slice(&g[(s * co + oc) * hw_out..(s * co + oc + 1) * hw_out]);
            }
        }
        let dw = need_dw.then(|| {
            let mut col = vec![T::zero(); rows * cols];
            im2col(&x.data(), &geo, &mut col);
            let mut dw = vec![T::zero(); co * rows];
            gemm(false, true, co, rows, cols, T::one(), &g_mat, &col, T::zero(), &mut dw);
            dw
        });
        let dx = need_dx.then(|| {
            let mut dcol = vec![T::zero(); rows * cols];
            gemm(
                true,
                false,
                rows,
                cols,
                co,
                T::one(),
                &wt.data(),
                &g_mat,
                T::zero(),
                &mut dcol,
            );
            let mut dx = vec![T::zero(); n * c * h * w];
            col2im(&dcol, &geo, &mut dx);
            dx
        });
        let mut grads = vec![dx, dw];
        if has_bias {
            let db = (0..co)
                .map(|oc| g_mat[oc * cols..(oc + 1) * cols].iter().copied().sum())
                .collect();
            grads.push(Some(db));
        }
        grads
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct nested-loop cross-correlation.
    fn conv_oracle(
        x: &[f64],
        [n, c, h, w]: [usize; 4],
        wt: &[f64],
        bias: &[f64],
        p: ConvParams,
    ) -> (Vec<f64>, usize, usize) {
        let ho = (h + 2 * p.padding - p.kernel) / p.stride + 1;
        let wo = (w + 2 * p.padding - p.kernel) / p.stride + 1;
        let co = p.out_channels;
        let k = p.kernel;
        let mut out = vec![0.0; n * co * ho * wo];
        for s in 0..n {
            for oc in 0..co {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = bias[oc];
                        for ci in 0..c {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let iy = (oy * p.stride + ky) as isize - p.padding as isize;
                                    let ix = (ox * p.stride + kx) as isize - p.padding as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                        continue;
                                    }
                                    acc += x[((s * c + ci) * h + iy as usize) * w + ix as usize]
                                        * wt[((oc * c + ci) * k + ky) * k + kx];
                                }
                            }
                        }
                        out[((s * co + oc) * ho + oy) * wo + ox] = acc;
                    }
                }
            }
        }
        (out, ho, wo)
    }

    #[test]
    fn output_len_matches_table_rows() {
        // 5x5 pad 2, 7x7 pad 3, 3x3 pad 1, 1x1 stride 1 keep size; 1x1 stride 2 halves.
        assert_eq!(ConvParams::new(3, 32, 5, 1, 2).output_len(224), Some(224));
        assert_eq!(ConvParams::new(3, 32, 7, 1, 3).output_len(224), Some(224));
        assert_eq!(ConvParams::new(32, 32, 1, 2, 0).output_len(224), Some(112));
        assert_eq!(ConvParams::new(32, 64, 3, 1, 1).output_len(112), Some(112));
        assert_eq!(ConvParams::new(64, 64, 1, 1, 0).output_len(112), Some(112));
        assert_eq!(ConvParams::new(1, 1, 5, 1, 0).output_len(3), None);
        assert_eq!(ConvParams::new(1, 1, 1, 0, 0).output_len(3), None);
    }

    #[test]
    fn identity_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Tensor::<f64>::randn(&[1, 1, 5, 6], 1.0, &mut rng);
        let w = Tensor::new(&[1, 1, 1, 1], vec![1.0]).unwrap();
        let b = Tensor::new(&[1], vec![0.0]).unwrap();
        let y = conv2d(&x, &w, Some(&b), ConvParams::new(1, 1, 1, 1, 0)).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cases = [
            ([1, 1, 4, 4], ConvParams::new(1, 1, 3, 1, 1)),
            ([2, 3, 7, 5], ConvParams::new(3, 4, 3, 2, 1)),
            ([2, 2, 6, 6], ConvParams::new(2, 3, 5, 1, 2)),
            ([1, 3, 9, 9], ConvParams::new(3, 2, 7, 1, 3)),
            ([3, 2, 8, 8], ConvParams::new(2, 2, 1, 2, 0)),
            ([1, 2, 5, 5], ConvParams::new(2, 2, 3, 3, 0)),
        ];
        for (shape, p) in cases {
            let x = Tensor::<f64>::randn(&shape, 1.0, &mut rng);
            let w = Tensor::<f64>::randn(&p.weight_shape(), 1.0, &mut rng);
            let b = Tensor::<f64>::randn(&[p.out_channels], 1.0, &mut rng);
            let y = conv2d(&x, &w, Some(&b), p).unwrap();
            let (expected, ho, wo) = conv_oracle(&x.to_vec(), shape, &w.to_vec(), &b.to_vec(), p);
            assert_eq!(y.shape(), &[shape[0], p.out_channels, ho, wo]);
            for (a, e) in y.to_vec().iter().zip(&expected) {
                assert!((a - e).abs() < 1e-12, "{a} vs {e}");
            }
        }
    }

    #[test]
    fn channel_mismatch_names_dimension() {
        let x = Tensor::<f32>::zeros(&[1, 2, 4, 4]);
        let w = Tensor::<f32>::zeros(&[1, 3, 3, 3]);
        let err = conv2d(&x, &w, None, ConvParams::new(3, 1, 3, 1, 1)).unwrap_err();
        assert!(matches!(
            err,
            TensorError::DimMismatch {
                dim: "input channels",
                expected: 3,
                actual: 2,
                ..
            }
        ));
    }

    #[test]
    fn kernel_larger_than_padded_input_is_error() {
        let x = Tensor::<f32>::zeros(&[1, 1, 2, 2]);
        let w = Tensor::<f32>::zeros(&[1, 1, 5, 5]);
        assert!(conv2d(&x, &w, None, ConvParams::new(1, 1, 5, 1, 0)).is_err());
    }
}
