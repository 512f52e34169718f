use super::{expect_dim, expect_rank};
use crate::tensor::{gemm, Element, Result, Tensor};

/// `y = x·Wᵀ + b` for `x: n×d_in`, `W: d_out×d_in`, `b: d_out`.
pub fn linear<T: Element>(input: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    const OP: &str = "linear";
    expect_rank(OP, input, 2)?;
    expect_rank(OP, weight, 2)?;
    expect_rank(OP, bias, 1)?;
    let (n, d_in) = (input.shape()[0], input.shape()[1]);
    let d_out = weight.shape()[0];
    expect_dim(OP, "input features", weight.shape()[1], d_in)?;
    expect_dim(OP, "bias length", d_out, bias.shape()[0])?;

    let mut out = vec![T::zero(); n * d_out];
    for row in out.chunks_mut(d_out) {
        row.copy_from_slice(&bias.data());
    }
    gemm(
        false,
        true,
        n,
        d_out,
        d_in,
        T::one(),
        &input.data(),
        &weight.data(),
        T::one(),
        &mut out,
    );

    let (x, w) = (input.clone(), weight.clone());
    let need_dx = input.requires_grad();
    Tensor::from_op(
        OP,
        vec![n, d_out],
        out,
        vec![input.clone(), weight.clone(), bias.clone()],
        move |_, g| {
            let dx = need_dx.then(|| {
                let mut dx = vec![T::zero(); n * d_in];
                gemm(false, false, n, d_in, d_out, T::one(), g, &w.data(), T::zero(), &mut dx);
                dx
            });
            let mut dw = vec![T::zero(); d_out * d_in];
            gemm(true, false, d_out, d_in, n, T::one(), g, &x.data(), T::zero(), &mut dw);
            let mut db = vec![T::zero(); d_out];
            for row in g.chunks(d_out) {
                db.iter_mut().zip(row).for_each(|(d, &v)| *d += v);
            }
            vec![dx, Some(dw), Some(db)]
        },
    )
}
