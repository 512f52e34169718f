use rand::Rng;

use super::{expect_dim, expect_rank};
use crate::tensor::{Element, Mode, Result, Tensor, TensorError};

pub fn relu<T: Element>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let data: Vec<T> = x.data().iter().map(|&v| v.max(T::zero())).collect();
    crate::tensor::gradcheck::observe_relu(&data);
    Tensor::from_op("relu", x.shape().to_vec(), data, vec![x.clone()], |out, g| {
        let dx = out
            .iter()
            .zip(g)
            .map(|(&o, &gi)| if o > T::zero() { gi } else { T::zero() })
            .collect();
        vec![Some(dx)]
    })
}

pub fn add<T: Element>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.shape() != b.shape() {
        return Err(TensorError::InvalidArgument {
            op: "add",
            message: format!("shapes {:?} and {:?} differ", a.shape(), b.shape()),
        });
    }
    let data = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x + y).collect();
    Tensor::from_op("add", a.shape().to_vec(), data, vec![a.clone(), b.clone()], |_, g| {
        vec![Some(g.to_vec()), Some(g.to_vec())]
    })
}

/// Multiplies every element by a fixed constant.
pub fn mul_const<T: Element>(x: &Tensor<T>, c: T) -> Result<Tensor<T>> {
    let data = x.data().iter().map(|&v| v * c).collect();
    Tensor::from_op("mul_const", x.shape().to_vec(), data, vec![x.clone()], move |_, g| {
        vec![Some(g.iter().map(|&gi| gi * c).collect())]
    })
}

/// Multiplies every element of `x` by the single value held in `s`.
pub fn mul_scalar<T: Element>(x: &Tensor<T>, s: &Tensor<T>) -> Result<Tensor<T>> {
    expect_dim("mul_scalar", "scalar numel", 1, s.numel())?;
    let sv = s.item();
    let data = x.data().iter().map(|&v| v * sv).collect();
    let (xc, sc) = (x.clone(), s.clone());
    Tensor::from_op(
        "mul_scalar",
        x.shape().to_vec(),
        data,
        vec![x.clone(), s.clone()],
        move |_, g| {
            let sv = sc.item();
            let dx = g.iter().map(|&gi| gi * sv).collect();
            let ds = xc.data().iter().zip(g).map(|(&xv, &gi)| xv * gi).sum();
            vec![Some(dx), Some(vec![ds])]
        },
    )
}

pub fn exp<T: Element>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let data = x.data().iter().map(|v| v.exp()).collect();
    Tensor::from_op("exp", x.shape().to_vec(), data, vec![x.clone()], |out, g| {
        vec![Some(out.iter().zip(g).map(|(&o, &gi)| o * gi).collect())]
    })
}

/// Sum of all elements as a `[1]` tensor.
pub fn sum<T: Element>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let total: T = x.data().iter().copied().sum();
    let n = x.numel();
    Tensor::from_op("sum", vec![1], vec![total], vec![x.clone()], move |_, g| {
        vec![Some(vec![g[0]; n])]
    })
}

pub fn reshape<T: Element>(x: &Tensor<T>, shape: &[usize]) -> Result<Tensor<T>> {
    let numel: usize = shape.iter().product();
    if numel != x.numel() {
        return Err(TensorError::ElementCount {
            shape: shape.to_vec(),
            expected: numel,
            actual: x.numel(),
        });
    }
    Tensor::from_op("reshape", shape.to_vec(), x.to_vec(), vec![x.clone()], |_, g| {
        vec![Some(g.to_vec())]
    })
}

/// Picks element `index` of the flattened tensor as a `[1]` tensor.
pub fn select<T: Element>(x: &Tensor<T>, index: usize) -> Result<Tensor<T>> {
    if index >= x.numel() {
        return Err(TensorError::InvalidArgument {
            op: "select",
            message: format!("index {index} out of range for {} elements", x.numel()),
        });
    }
    let n = x.numel();
    let v = x.data()[index];
    Tensor::from_op("select", vec![1], vec![v], vec![x.clone()], move |_, g| {
        let mut dx = vec![T::zero(); n];
        dx[index] = g[0];
        vec![Some(dx)]
    })
}

/// Concatenates `n×c_i×h×w` maps along the channel axis, in argument order.
pub fn concat_channels<T: Element>(inputs: &[Tensor<T>]) -> Result<Tensor<T>> {
    const OP: &str = "concat_channels";
    let first = inputs.first().ok_or(TensorError::InvalidArgument {
        op: OP,
        message: "no inputs".into(),
    })?;
    expect_rank(OP, first, 4)?;
    let (n, h, w) = (first.shape()[0], first.shape()[2], first.shape()[3]);
    let mut channels = Vec::with_capacity(inputs.len());
    for t in inputs {
        expect_rank(OP, t, 4)?;
        expect_dim(OP, "batch", n, t.shape()[0])?;
        expect_dim(OP, "height", h, t.shape()[2])?;
        expect_dim(OP, "width", w, t.shape()[3])?;
        channels.push(t.shape()[1]);
    }
    let total_c: usize = channels.iter().sum();
    let hw = h * w;
    let mut data = Vec::with_capacity(n * total_c * hw);
    let guards: Vec<_> = inputs.iter().map(|t| t.data()).collect();
    for s in 0..n {
        for (g, &c) in guards.iter().zip(&channels) {
            data.extend_from_slice(&g[s * c * hw..(s + 1) * c * hw]);
        }
    }
    drop(guards);
    Tensor::from_op(OP, vec![n, total_c, h, w], data, inputs.to_vec(), move |_, g| {
        let mut grads: Vec<Vec<T>> = channels.iter().map(|&c| Vec::with_capacity(n * c * hw)).collect();
        for s in 0..n {
            let mut offset = s * total_c * hw;
            for (gi, &c) in grads.iter_mut().zip(&channels) {
                gi.extend_from_slice(&g[offset..offset + c * hw]);
                offset += c * hw;
            }
        }
        grads.into_iter().map(Some).collect()
    })
}

/// Inverted dropout: in train mode each element is zeroed with probability
/// `p` and survivors are scaled by `1/(1-p)`. Eval mode (or `p == 0`) returns
/// the input itself.
pub fn dropout<T: Element, R: Rng + ?Sized>(x: &Tensor<T>, p: f64, mode: Mode, rng: &mut R) -> Result<Tensor<T>> {
    if !(0.0..1.0).contains(&p) {
        return Err(TensorError::InvalidArgument {
            op: "dropout",
            message: format!("drop probability {p} outside [0, 1)"),
        });
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok(x.clone());
    }
    let scale = T::of(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..x.numel())
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { scale })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Tensor::from_op("dropout", x.shape().to_vec(), data, vec![x.clone()], move |_, g| {
        vec![Some(g.iter().zip(&mask).map(|(&gi, &m)| gi * m).collect())]
    })
}
