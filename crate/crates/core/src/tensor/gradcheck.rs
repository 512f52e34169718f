//! Central finite-difference checks of reverse-mode gradients (double
//! precision).

use std::cell::Cell;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Element, Tensor, TensorError};

thread_local! {
    static RELU_PATTERN: Cell<Option<u64>> = const { Cell::new(None) };
}

/// Folds a ReLU output's active/inactive pattern into the running signature
/// while a probe is recording on this thread.
pub(crate) fn observe_relu<T: Element>(out: &[T]) {
    RELU_PATTERN.with(|p| {
        if let Some(mut h) = p.get() {
            for &v in out {
                h = (h ^ (v > T::zero()) as u64).wrapping_mul(0x100_0000_01b3);
            }
            h = (h ^ 0xff).wrapping_mul(0x100_0000_01b3);
            p.set(Some(h));
        }
    })
}

/// Runs `f` and returns its result with the signature of every ReLU
/// activation pattern it produced. Equal signatures on the points of a
/// difference stencil mean no kink lies between them.
pub fn with_relu_signature<R>(f: impl FnOnce() -> R) -> (R, u64) {
    let previous = RELU_PATTERN.with(|p| p.replace(Some(0xcbf2_9ce4_8422_2325)));
    let out = f();
    let sig = RELU_PATTERN.with(|p| p.replace(previous)).unwrap_or(0);
    (out, sig)
}

fn eval_signed<F>(f: &F) -> Result<(f64, u64), TensorError>
where
    F: Fn() -> Result<Tensor<f64>, TensorError>,
{
    let (value, sig) = with_relu_signature(|| f().map(|t| t.item()));
    let value = value?;
    if !value.is_finite() {
        return Err(TensorError::NonFinite { op: "gradcheck" });
    }
    Ok((value, sig))
}

#[derive(Debug, Clone, Copy)]
pub struct GradcheckOptions {
    /// Central difference step.
    pub step: f64,
    /// Check at most this many randomly chosen elements of each tensor.
    pub max_elems_per_tensor: Option<usize>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            max_elems_per_tensor: None,
        }
    }
}

/// Outcome of a check: the worst relative error and where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub worst_tensor: usize,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    /// Elements whose stencil crossed a ReLU kink (not differentiable
    /// there, so not compared).
    pub skipped: usize,
}

/// `|a − n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares the gradient of the scalar `f()` with respect to each leaf in
/// `wrt` against central differences. `f` must rebuild its graph from the
/// current leaf values on every call and be deterministic.
pub fn check_gradients<F>(
    f: F,
    wrt: &[Tensor<f64>],
    opts: GradcheckOptions,
    seed: u64,
) -> Result<GradcheckReport, TensorError>
where
    F: Fn() -> Result<Tensor<f64>, TensorError>,
{
    for t in wrt {
        t.zero_grad();
    }
    let (root, center) = with_relu_signature(&f);
    let root = root?;
    if root.numel() != 1 {
        return Err(TensorError::NonScalarRoot(root.shape().to_vec()));
    }
    root.backward()?;
    drop(root);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst_tensor: 0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
        skipped: 0,
    };
    let h = opts.step;
    for (ti, t) in wrt.iter().enumerate() {
        let analytic = t.grad().unwrap_or_else(|| vec![0.0; t.numel()]);
        let indices: Vec<usize> = match opts.max_elems_per_tensor {
            Some(k) if k < t.numel() => {
                let mut v = sample(&mut rng, t.numel(), k).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..t.numel()).collect(),
        };
        for i in indices {
            let original = t.data()[i];
            let at = |offset: f64| {
                t.data_mut()[i] = original + offset;
                let r = eval_signed(&f);
                t.data_mut()[i] = original;
                r
            };
            let (plus, sp) = at(h)?;
            let (minus, sm) = at(-h)?;
            if sp != center || sm != center {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(analytic[i], numeric);
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_tensor = ti;
                report.worst_index = i;
                report.analytic = analytic[i];
                report.numeric = numeric;
            }
        }
    }
    for t in wrt {
        t.zero_grad();
    }
    Ok(report)
}

/// Directional-derivative check of one tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalCheck {
    pub tensor: usize,
    /// `∇f · v`.
    pub analytic: f64,
    /// `(f(θ + h·v) − f(θ − h·v)) / 2h`.
    pub numeric: f64,
    pub rel_error: f64,
    /// Directions drawn until one kept every ReLU on the same side. Draw `k`
    /// moves about `numel / 2^(k-1)` elements.
    pub attempts: usize,
    /// False when no kink-free direction was found within the attempt budget.
    pub smooth: bool,
}

pub const MAX_DIRECTIONS: usize = 32;

/// For each tensor in `wrt`, perturbs it along a random unit direction `v`
/// (the other tensors fixed) and compares the central difference with the
/// projected analytic gradient. Directions whose stencil crosses a ReLU kink
/// are redrawn on a halved random support. This probes every element at
/// once, so a large model is covered with a few evaluations per tensor.
pub fn check_directional<F>(
    f: F,
    wrt: &[Tensor<f64>],
    step: f64,
    seed: u64,
) -> Result<Vec<DirectionalCheck>, TensorError>
where
    F: Fn() -> Result<Tensor<f64>, TensorError>,
{
    for t in wrt {
        t.zero_grad();
    }
    let (root, center) = with_relu_signature(&f);
    let root = root?;
    if root.numel() != 1 {
        return Err(TensorError::NonScalarRoot(root.shape().to_vec()));
    }
    root.backward()?;
    drop(root);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(wrt.len());
    for (ti, t) in wrt.iter().enumerate() {
        let grad = t.grad().unwrap_or_else(|| vec![0.0; t.numel()]);
        let original = t.to_vec();
        let mut check = None;
        for attempt in 1..=MAX_DIRECTIONS {
            let mut v = Tensor::<f64>::randn(t.shape(), 1.0, &mut rng).to_vec();
            // after a kink, perturb ever fewer elements
            let support = t.numel().div_ceil(1 << (attempt - 1).min(40));
            if support < t.numel() {
                let keep = sample(&mut rng, t.numel(), support).into_vec();
                let mut sparse = vec![0.0; t.numel()];
                keep.into_iter().for_each(|i| sparse[i] = v[i]);
                v = sparse;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.iter_mut().for_each(|x| *x /= norm);
            let shifted = |offset: f64| {
                {
                    let mut d = t.data_mut();
                    for ((x, o), vi) in d.iter_mut().zip(&original).zip(&v) {
                        *x = o + offset * vi;
                    }
                }
                let r = eval_signed(&f);
                t.data_mut().copy_from_slice(&original);
                r
            };
            let (plus, sp) = shifted(step)?;
            let (minus, sm) = shifted(-step)?;
            let numeric = (plus - minus) / (2.0 * step);
            let analytic: f64 = grad.iter().zip(&v).map(|(g, vi)| g * vi).sum();
            let smooth = sp == center && sm == center;
            check = Some(DirectionalCheck {
                tensor: ti,
                analytic,
                numeric,
                rel_error: relative_error(analytic, numeric),
                attempts: attempt,
                smooth,
            });
            if smooth {
                break;
            }
        }
        out.push(check.expect("at least one direction"));
    }
    for t in wrt {
        t.zero_grad();
    }
    Ok(out)
}

/// Draws standard-normal leaves of the given shapes from `seed`, then runs
/// [`check_gradients`] on `f(leaves)`. Returns the max relative error.
pub fn gradcheck<F>(f: F, shapes: &[&[usize]], seed: u64) -> Result<f64, TensorError>
where
    F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>, TensorError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaves: Vec<Tensor<f64>> = shapes
        .iter()
        .map(|s| {
            let t = Tensor::<f64>::randn(s, 1.0, &mut rng);
            Tensor::leaf(s, t.to_vec(), true)
        })
        .collect::<Result<_, _>>()?;
    let report = check_gradients(|| f(&leaves), &leaves, GradcheckOptions::default(), seed)?;
    Ok(report.max_rel_error)
}
