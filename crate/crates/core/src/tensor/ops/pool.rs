use super::expect_rank;
use crate::tensor::{Element, Result, Tensor, TensorError};

/// Input index range `[floor(i·len/out), ceil((i+1)·len/out))` averaged into
/// output cell `i`.
pub fn adaptive_bin(i: usize, len: usize, out: usize) -> (usize, usize) {
    let start = i * len / out;
    let end = ((i + 1) * len).div_ceil(out);
    (start, end)
}

/// Corner-aligned bilinear taps: output index `i` samples input coordinate
/// `i·(len−1)/(out−1)` as `(lo, hi, frac)` with value `(1−frac)·x[lo] +
/// frac·x[hi]`.
pub(crate) fn corner_aligned_taps(len: usize, out: usize) -> Vec<(usize, usize, f64)> {
    (0..out)
        .map(|i| {
            if out == 1 || len == 1 {
                return (0, 0, 0.0);
            }
            let src = (i * (len - 1)) as f64 / (out - 1) as f64;
            let lo = (src.floor() as usize).min(len - 1);
            let hi = (lo + 1).min(len - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

fn dims4<T: Element>(op: &'static str, x: &Tensor<T>) -> Result<[usize; 4]> {
    expect_rank(op, x, 4)?;
    let s = x.shape();
    Ok([s[0], s[1], s[2], s[3]])
}

/// Averages each of the `out.0 × out.1` adaptive bins of every channel.
pub fn adaptive_avg_pool2d<T: Element>(input: &Tensor<T>, out: (usize, usize)) -> Result<Tensor<T>> {
    const OP: &str = "adaptive_avg_pool2d";
    let [n, c, h, w] = dims4(OP, input)?;
    let (ho, wo) = out;
    if ho == 0 || wo == 0 || ho > h || wo > w {
        return Err(TensorError::InvalidArgument {
            op: OP,
            message: format!("output {ho}x{wo} must lie within 1x1..={h}x{w}"),
        });
    }
    let rows: Vec<_> = (0..ho).map(|i| adaptive_bin(i, h, ho)).collect();
    let cols: Vec<_> = (0..wo).map(|j| adaptive_bin(j, w, wo)).collect();
    let x = input.data();
    let mut data = Vec::with_capacity(n * c * ho * wo);
    for plane in x.chunks(h * w) {
        for &(r0, r1) in &rows {
            for &(c0, c1) in &cols {
                let mut acc = T::zero();
                for y in r0..r1 {
                    acc += plane[y * w + c0..y * w + c1].iter().copied().sum();
                }
                data.push(acc / T::of(((r1 - r0) * (c1 - c0)) as f64));
            }
        }
    }
    drop(x);
    Tensor::from_op(OP, vec![n, c, ho, wo], data, vec![input.clone()], move |_, g| {
        let mut dx = vec![T::zero(); n * c * h * w];
        for (plane, gp) in dx.chunks_mut(h * w).zip(g.chunks(ho * wo)) {
            for (i, &(r0, r1)) in rows.iter().enumerate() {
                for (j, &(c0, c1)) in cols.iter().enumerate() {
                    let share = gp[i * wo + j] / T::of(((r1 - r0) * (c1 - c0)) as f64);
                    for y in r0..r1 {
                        plane[y * w + c0..y * w + c1].iter_mut().for_each(|v| *v += share);
                    }
                }
            }
        }
        vec![Some(dx)]
    })
}

/// Corner-aligned bilinear upsampling to `out.0 × out.1` (no downscaling).
pub fn bilinear_upsample<T: Element>(input: &Tensor<T>, out: (usize, usize)) -> Result<Tensor<T>> {
    const OP: &str = "bilinear_upsample";
    let [n, c, h, w] = dims4(OP, input)?;
    let (ho, wo) = out;
    if ho < h || wo < w {
        return Err(TensorError::InvalidArgument {
            op: OP,
            message: format!("cannot downscale {h}x{w} to {ho}x{wo}"),
        });
    }
    let ty: Vec<_> = corner_aligned_taps(h, ho)
        .into_iter()
        .map(|(a, b, f)| (a, b, T::of(f)))
        .collect();
    let tx: Vec<_> = corner_aligned_taps(w, wo)
        .into_iter()
        .map(|(a, b, f)| (a, b, T::of(f)))
        .collect();
    let x = input.data();
    let mut data = Vec::with_capacity(n * c * ho * wo);
    for plane in x.chunks(h * w) {
        for &(y0, y1, fy) in &ty {
            for &(x0, x1, fx) in &tx {
                let top = plane[y0 * w + x0] * (T::one() - fx) + plane[y0 * w + x1] * fx;
                let bottom = plane[y1 * w + x0] * (T::one() - fx) + plane[y1 * w + x1] * fx;
                data.push(top * (T::one() - fy) + bottom * fy);
            }
        }
    }
    drop(x);
    Tensor::from_op(OP, vec![n, c, ho, wo], data, vec![input.clone()], move |_, g| {
        let mut dx = vec![T::zero(); n * c * h * w];
        for (plane, gp) in dx.chunks_mut(h * w).zip(g.chunks(ho * wo)) {
            for (i, &(y0, y1, fy)) in ty.iter().enumerate() {
                for (j, &(x0, x1, fx)) in tx.iter().enumerate() {
                    let gv = gp[i * wo + j];
                    plane[y0 * w + x0] += gv * (T::one() - fy) * (T::one() - fx);
                    plane[y0 * w + x1] += gv * (T::one() - fy) * fx;
                    plane[y1 * w + x0] += gv * fy * (T::one() - fx);
                    plane[y1 * w + x1] += gv * fy * fx;
                }
            }
        }
        vec![Some(dx)]
    })
}
