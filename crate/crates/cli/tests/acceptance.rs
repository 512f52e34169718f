//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! This target reports; it does not assert. The behaviours it measures are
//! asserted by the unit and integration suites of each crate, and a FAIL
//! here is a measured outcome, not a crash.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use cuisine_core::arch::{
    load_checkpoint, render_trace, save_checkpoint, shape_trace, ArchError, ModelConfig, WidthMultiplier,
};
use cuisine_core::data::{
    reduce_flavor_named, render_sample, stratified_split, synth_dataset, Split, DEFAULT_FRACTIONS,
};
use cuisine_core::objective::{
    joint_loss, precision_recall_f1, weighted_cross_entropy, ClassWeights, MetricsReport, Task, TaskSpec, TABLE_HEADER,
};
use cuisine_core::rng::substream;
use cuisine_core::tensor::gradcheck::{check_gradients, gradcheck, GradcheckOptions};
use cuisine_core::tensor::ops::{self, ConvParams, RunningStats};
use cuisine_core::tensor::{Mode, Tensor, TensorError};
use cuisine_core::train::{adam_step, evaluate, poly_lr, AdamParams, ImageSet, OptimizerState, TrainConfig, Trainer};
use cuisine_core::Model;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN_TRACE: &str = include_str!("golden/default_trace.txt");

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn criterion(results: &mut Vec<bool>, id: usize, name: &str, f: impl FnOnce() -> Outcome) {
    let t0 = Instant::now();
    let out = f();
    let status = if out.pass { "PASS" } else { "FAIL" };
    println!(
        "criterion {id} [{status}] {name} ({:.1} s): {}",
        t0.elapsed().as_secs_f64(),
        out.detail
    );
    results.push(out.pass);
}

fn gen(seed: u64) -> rand_chacha::ChaCha8Rng {
    substream(seed, "acceptance", 0)
}

// ---------------------------------------------------------------- 1

fn table_conformance() -> Outcome {
    let t0 = Instant::now();
    let text = render_trace(&shape_trace(&ModelConfig::default()).unwrap());
    let secs = t0.elapsed().as_secs_f64();
    let diff: Vec<String> = text
        .lines()
        .zip(GOLDEN_TRACE.lines())
        .filter(|(a, b)| a != b)
        .map(|(a, b)| format!("{a} != {b}"))
        .collect();
    let rows = text.lines().count();
    let same = text == GOLDEN_TRACE;
    Outcome::new(
        same && secs < 1.0,
        format!(
            "{rows} rows, golden diff {} lines {diff:?}, trace built in {secs:.4} s",
            diff.len()
        ),
    )
}

// ---------------------------------------------------------------- 2

type Closure = dyn Fn(&[Tensor<f64>]) -> Result<Tensor<f64>, TensorError>;

fn project(y: &Tensor<f64>, seed: u64) -> Result<Tensor<f64>, TensorError> {
    let n = y.numel();
    let w = Tensor::<f64>::randn(&[1, n], 1.0, &mut substream(seed, "project", 0));
    let flat = ops::reshape(y, &[1, n])?;
    ops::sum(&ops::linear(&flat, &w, &Tensor::zeros(&[1]))?)
}

fn op_cases() -> Vec<(String, Vec<Vec<usize>>, Box<Closure>)> {
    let mut cases: Vec<(String, Vec<Vec<usize>>, Box<Closure>)> = vec![
        ("relu".into(), vec![vec![2, 3, 4, 4]], Box::new(|t| ops::relu(&t[0]))),
        (
            "add".into(),
            vec![vec![2, 3, 2, 2], vec![2, 3, 2, 2]],
            Box::new(|t| ops::add(&t[0], &t[1])),
        ),
        (
            "mul_const".into(),
            vec![vec![5, 3]],
            Box::new(|t| ops::mul_const(&t[0], -0.7)),
        ),
        (
            "mul_scalar".into(),
            vec![vec![2, 3, 2, 2], vec![1]],
            Box::new(|t| ops::mul_scalar(&t[0], &ops::select(&t[1], 0)?)),
        ),
        (
            "exp".into(),
            vec![vec![4, 3]],
            Box::new(|t| ops::exp(&ops::mul_const(&t[0], 0.5)?)),
        ),
        ("sum".into(), vec![vec![3, 4]], Box::new(|t| ops::sum(&t[0]))),
        (
            "reshape".into(),
            vec![vec![2, 6]],
            Box::new(|t| ops::reshape(&t[0], &[3, 4])),
        ),
        ("select".into(), vec![vec![7]], Box::new(|t| ops::select(&t[0], 4))),
        (
            "concat_channels".into(),
            vec![vec![2, 2, 3, 3], vec![2, 1, 3, 3]],
            Box::new(|t| ops::concat_channels(&[t[0].clone(), t[1].clone()])),
        ),
        (
            "dropout".into(),
            vec![vec![4, 10]],
            Box::new(|t| ops::dropout(&t[0], 0.5, Mode::Train, &mut gen(11))),
        ),
        (
            "linear".into(),
            vec![vec![3, 5], vec![4, 5], vec![4]],
            Box::new(|t| ops::linear(&t[0], &t[1], &t[2])),
        ),
        (
            "batch_norm2d train".into(),
            vec![vec![3, 2, 3, 3], vec![2], vec![2]],
            Box::new(|t| ops::batch_norm2d(&t[0], &t[1], &t[2], &mut RunningStats::new(2), Mode::Train, 1e-5, 0.1)),
        ),
        (
            "batch_norm2d eval".into(),
            vec![vec![3, 2, 3, 3], vec![2], vec![2]],
            Box::new(|t| {
                let mut stats = RunningStats {
                    mean: vec![0.3, -0.2],
                    var: vec![1.7, 0.4],
                };
                ops::batch_norm2d(&t[0], &t[1], &t[2], &mut stats, Mode::Eval, 1e-5, 0.1)
            }),
        ),
        (
            "adaptive_avg_pool2d".into(),
            vec![vec![1, 2, 7, 5]],
            Box::new(|t| ops::adaptive_avg_pool2d(&t[0], (3, 3))),
        ),
        (
            "bilinear_upsample".into(),
            vec![vec![2, 2, 3, 3]],
            Box::new(|t| ops::bilinear_upsample(&t[0], (8, 8))),
        ),
        (
            "log_softmax".into(),
            vec![vec![4, 6]],
            Box::new(|t| ops::log_softmax(&t[0])),
        ),
        (
            "nll_weighted".into(),
            vec![vec![4, 6]],
            Box::new(|t| {
                ops::nll_weighted(
                    &ops::log_softmax(&t[0])?,
                    &[0, 5, 2, 2],
                    &[0.5, 1.0, 2.0, 1.0, 1.0, 0.25],
                )
            }),
        ),
    ];
    for (k, s, p) in [(1, 1, 0), (3, 1, 1), (3, 2, 1), (5, 1, 2), (7, 2, 3)] {
        let cp = ConvParams::new(2, 3, k, s, p);
        cases.push((
            format!("conv2d k{k}s{s}p{p}"),
            vec![vec![2, 2, 7, 7], cp.weight_shape().to_vec(), vec![3]],
            Box::new(move |t| ops::conv2d(&t[0], &t[1], Some(&t[2]), cp)),
        ));
    }
    cases
}

fn tiny_config() -> ModelConfig {
    ModelConfig {
        width: WidthMultiplier::new(1, 8).unwrap(),
        input_size: 32,
        pool_scales: vec![1, 2],
        bottleneck_counts: [1, 1, 1, 1],
        ..Default::default()
    }
}

fn tasks(alphas: [f64; 2]) -> TaskSpec {
    let task = |name: &str, alpha| Task {
        name: name.into(),
        labels: vec![],
        alpha,
    };
    TaskSpec::new(vec![task("cuisine", alphas[0]), task("flavor", alphas[1])]).unwrap()
}

/// Weighted joint loss of the tiny model on a fixed batch of four.
fn tiny_loss(model: &Model<f64>, x: &Tensor<f64>, seed: u64, alphas: [f64; 2]) -> Result<Tensor<f64>, TensorError> {
    let yc: Vec<usize> = (0..4).map(|i| (i * 3 + seed as usize) % 10).collect();
    let yf: Vec<usize> = (0..4).map(|i| (i + seed as usize) % 6).collect();
    let wc = ClassWeights::from_labels(&[0, 1, 2, 3, 3, 5, 7, 9, 9, 9], 10).unwrap();
    let wf = ClassWeights::from_counts(&[3, 1, 4, 1, 5, 9]).unwrap();
    let out = model.forward(x, Mode::Train, &mut gen(seed)).map_err(|e| match e {
        ArchError::Tensor(t) => t,
        other => panic!("{other}"),
    })?;
    let lc = weighted_cross_entropy(&out.cuisine, &yc, &wc).unwrap();
    let lf = weighted_cross_entropy(&out.flavor, &yf, &wf).unwrap();
    ops::mul_const(&joint_loss(&[lc, lf], &tasks(alphas)).unwrap(), 0.25)
}

fn gradient_correctness() -> Outcome {
    let mut detail = String::new();
    let mut pass = true;
    let mut op_worst: (f64, String) = (0.0, String::new());
    for (name, shapes, f) in op_cases() {
        let shapes: Vec<&[usize]> = shapes.iter().map(Vec::as_slice).collect();
        for seed in 0..10 {
            let err = gradcheck(|t| project(&f(t)?, seed), &shapes, seed).unwrap();
            if err > op_worst.0 {
                op_worst = (err, format!("{name} seed {seed}"));
            }
        }
    }
    pass &= op_worst.0 < 1e-5;
    write!(detail, "ops: max {:.2e} ({}) < 1e-5; ", op_worst.0, op_worst.1).unwrap();

    let mut failing = Vec::new();
    let mut e2e_worst: f64 = 0.0;
    let (mut checked, mut skipped) = (0, 0);
    for seed in 0..10 {
        let model = Model::<f64>::new(&tiny_config(), seed).unwrap();
        let x = Tensor::<f64>::uniform(&[4, 3, 32, 32], 0.0, 1.0, &mut substream(seed, "input", 0));
        let params = model.parameters().to_vec();
        let opts = GradcheckOptions {
            step: 1e-5,
            max_elems_per_tensor: Some(4),
        };
        let r = check_gradients(|| tiny_loss(&model, &x, seed, [1.0, 1.0]), &params, opts, seed).unwrap();
        checked += r.checked;
        skipped += r.skipped;
        e2e_worst = e2e_worst.max(r.max_rel_error);
        if r.max_rel_error >= 1e-4 {
            let name = model.named_parameters().nth(r.worst_tensor).unwrap().0.to_string();
            failing.push(format!(
                "seed {seed}: {:.2e} at {name}[{}] (analytic {:.3e}, numeric {:.3e})",
                r.max_rel_error, r.worst_index, r.analytic, r.numeric
            ));
        }
    }
    pass &= failing.is_empty();
    write!(
        detail,
        "end-to-end: max {e2e_worst:.2e} over 10 seeds, {checked} elements checked, {skipped} kink stencils skipped"
    )
    .unwrap();
    if !failing.is_empty() {
        write!(detail, "; above 1e-4: {}", failing.join(", ")).unwrap();
    }
    Outcome::new(pass, detail)
}

// ---------------------------------------------------------------- 3

fn objective_fidelity() -> Outcome {
    let mut r = gen(3);
    let mut ce_worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(1..8);
        let c = r.random_range(2..11);
        let z: Vec<f64> = (0..n * c).map(|_| r.random_range(-4.0..4.0)).collect();
        let y: Vec<usize> = (0..n).map(|_| r.random_range(0..c)).collect();
        let counts: Vec<usize> = (0..c).map(|_| r.random_range(1..50)).collect();
        let w = ClassWeights::from_counts(&counts).unwrap();
        let logits = Tensor::leaf(&[n, c], z.clone(), false).unwrap();
        let got = weighted_cross_entropy(&logits, &y, &w).unwrap().item();
        let mut want = 0.0;
        for j in 0..n {
            let row = &z[j * c..(j + 1) * c];
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            want -= w.weights[y[j]] * (row[y[j]] - lse);
        }
        ce_worst = ce_worst.max((got - want).abs());
    }

    let mut sum_worst: f64 = 0.0;
    for _ in 0..100 {
        let c = r.random_range(2..20);
        let counts: Vec<usize> = (0..c).map(|_| r.random_range(0..1000)).collect();
        if counts.iter().all(|&k| k == 0) {
            continue;
        }
        let w = ClassWeights::from_counts(&counts).unwrap();
        sum_worst = sum_worst.max((w.weights.iter().sum::<f64>() - (c - 1) as f64).abs());
    }

    let model = Model::<f64>::new(&tiny_config(), 1).unwrap();
    let x = Tensor::<f64>::uniform(&[4, 3, 32, 32], 0.0, 1.0, &mut gen(4));
    tiny_loss(&model, &x, 1, [1.0, 0.0]).unwrap().backward().unwrap();
    let mut nonzero = 0;
    let mut trunk_moved = false;
    for (name, p) in model.named_parameters() {
        let g = p.grad().unwrap_or_default();
        if name.starts_with("head_flavor.") {
            nonzero += g.iter().filter(|v| **v != 0.0).count();
        } else if name.starts_with("stem.") {
            trunk_moved |= g.iter().any(|v| *v != 0.0);
        }
    }

    Outcome::new(
        ce_worst < 1e-6 && sum_worst < 1e-12 && nonzero == 0 && trunk_moved,
        format!(
            "CE vs scalar loop max |diff| {ce_worst:.2e} (100 cases); |sum w - (C-1)| max {sum_worst:.2e}; \
             alpha=(1,0): {nonzero} nonzero flavor-head gradient entries"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn schedule_and_optimizer() -> Outcome {
    let max_iter = 1000;
    let start = poly_lr(0.001, 0, max_iter, 0.9).unwrap();
    let end = poly_lr(0.001, max_iter, max_iter, 0.9).unwrap();
    let mid = poly_lr(0.001, max_iter / 2, max_iter, 0.9).unwrap();
    let mid_err = (mid - 0.001 * 0.5f64.powf(0.9)).abs();

    // one Adam step from zero moments: |Δθ| = lr·|g| / (|g| + eps)
    let g = [0.3, -2.0, 1e-3, 5e-7, 40.0];
    let lr = 0.001;
    let hp = AdamParams::default();
    let p = Tensor::leaf(&[1, g.len()], vec![1.0; g.len()], true).unwrap();
    let w = Tensor::leaf(&[1, g.len()], g.to_vec(), false).unwrap();
    ops::sum(&ops::linear(&p, &w, &Tensor::zeros(&[1])).unwrap())
        .unwrap()
        .backward()
        .unwrap();
    let mut state = OptimizerState::new(std::slice::from_ref(&p));
    adam_step(std::slice::from_ref(&p), &mut state, lr, hp).unwrap();
    let adam_err = p
        .to_vec()
        .iter()
        .zip(g)
        .map(|(after, gi)| ((1.0 - after) - lr * gi / (gi.abs() + hp.eps)).abs())
        .fold(0.0, f64::max);

    Outcome::new(
        start == 0.001 && end == 0.0 && mid_err < 1e-12 && adam_err < 1e-6,
        format!("lr(0) = {start}, lr(max) = {end}, midpoint error {mid_err:.1e}, Adam first-step error {adam_err:.1e}"),
    )
}

// ---------------------------------------------------------------- 5

const OVERFIT_PER_CLASS: usize = 4;
const OVERFIT_EPOCHS: usize = 200;
const OVERFIT_LR: f64 = 0.001;
const OVERFIT_BUDGET: Duration = Duration::from_secs(30 * 60);

fn desk_overfit() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(OVERFIT_PER_CLASS, 7, dir.path()).unwrap();
    let manifest = stratified_split(&manifest, DEFAULT_FRACTIONS, 7).unwrap();
    let config = ModelConfig {
        width: WidthMultiplier::new(1, 8).unwrap(),
        input_size: 64,
        pool_scales: vec![1, 2, 3, 4],
        dropout_p: 0.0,
        ..Default::default()
    };
    let train = ImageSet::load(&manifest, Some(Split::Train), 64, 1).unwrap();
    let model = Model::<f32>::new(&config, 7).unwrap();
    let tc = TrainConfig {
        epochs: OVERFIT_EPOCHS,
        base_lr: OVERFIT_LR,
        batch_size: 16,
        seed: 7,
        augment: false,
        ..Default::default()
    };
    let t0 = Instant::now();
    let mut trainer = Trainer::new(&model, tc, &train).unwrap();
    let (mut first, mut last) = (f64::NAN, f64::NAN);
    let mut epochs = 0;
    for e in 0..OVERFIT_EPOCHS {
        let s = match trainer.train_epoch(&train) {
            Ok(s) => s,
            Err(err) => return Outcome::new(false, format!("training aborted at epoch {}: {err}", e + 1)),
        };
        if e == 0 {
            first = s.joint;
        }
        last = s.joint;
        epochs += 1;
        if t0.elapsed() > OVERFIT_BUDGET {
            break;
        }
    }
    let report = evaluate(&model, &train, "train", 16).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let f1 = |i: usize| report.tasks[i].metrics.macro_avg.f1;
    let ratio = last / first;
    Outcome::new(
        f1(0) >= 0.95 && f1(1) >= 0.95 && ratio <= 0.1 && epochs <= 200 && secs <= OVERFIT_BUDGET.as_secs_f64(),
        format!(
            "{} train images ({} total), {epochs} epochs in {secs:.0} s; train macro F1 cuisine {:.3}, flavor {:.3}; \
             joint loss {first:.4} -> {last:.4} ({:.1}% of epoch 1)",
            train.len(),
            manifest.len(),
            f1(0),
            f1(1),
            100.0 * ratio
        ),
    )
}

// ---------------------------------------------------------------- 6

fn flavor_reduction() -> Outcome {
    let scores = [
        ("Sweet", 0.53),
        ("Sour", 0.33),
        ("Salty", 0.16),
        ("Piquant", 0.09),
        ("Bitter", 1.0),
        ("Meaty", 0.43),
    ];
    let got = reduce_flavor_named(&scores).unwrap();
    Outcome::new(got == "Bitter", format!("worked example reduces to {got}"))
}

// ---------------------------------------------------------------- 7

fn small_set(seed: u64) -> ImageSet {
    let mut r = gen(seed);
    let mut set = ImageSet {
        images: vec![],
        cuisine: vec![],
        flavor: vec![],
        paths: vec![],
    };
    for k in 0..20 {
        let (c, f) = (k % 10, (k * 7) % 6);
        set.images.push(render_sample(c, f, 32, &mut r));
        set.cuisine.push(c);
        set.flavor.push(f);
        set.paths.push(format!("mem/{k}").into());
    }
    set
}

fn run_small(set: &ImageSet) -> (Model<f32>, Vec<[f64; 3]>, MetricsReport) {
    let model = Model::<f32>::new(&tiny_config(), 3).unwrap();
    let tc = TrainConfig {
        epochs: 3,
        batch_size: 8,
        seed: 3,
        ..Default::default()
    };
    let mut trainer = Trainer::new(&model, tc, set).unwrap();
    let mut losses = Vec::new();
    for _ in 0..3 {
        let s = trainer.train_epoch(set).unwrap();
        losses.extend(s.batches.iter().map(|b| [b.task_losses[0], b.task_losses[1], b.joint]));
    }
    drop(trainer);
    let report = evaluate(&model, set, "train", 8).unwrap();
    (model, losses, report)
}

fn determinism_and_persistence() -> Outcome {
    let set = small_set(5);
    let (model, la, ra) = run_small(&set);
    let (_, lb, rb) = run_small(&set);
    let loss_diff = la
        .iter()
        .zip(&lb)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let same_len = la.len() == lb.len();
    let reports_equal = ra.render_table() == rb.render_table() && ra.render_kv() == rb.render_kv();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&model, None, &path).unwrap();
    let (loaded, _) = load_checkpoint::<f32>(&path).unwrap();
    let x = cuisine_core::data::batch_tensor::<f32>(&set.images);
    let logits = |m: &Model<f32>| {
        let out = m.forward(&x, Mode::Eval, &mut gen(0)).unwrap();
        let bits = |t: &Tensor<f32>| t.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        (bits(&out.cuisine), bits(&out.flavor))
    };
    let bit_identical = logits(&model) == logits(&loaded);
    let report_after = evaluate(&loaded, &set, "train", 8).unwrap();
    let report_same = report_after.render_kv() == ra.render_kv();

    Outcome::new(
        same_len && loss_diff <= 1e-12 && reports_equal && bit_identical && report_same,
        format!(
            "{} batch losses, max run-to-run diff {loss_diff:.1e}; reports byte-identical: {reports_equal}; \
             eval logits bit-identical after save/load: {bit_identical}; report unchanged: {report_same}",
            la.len()
        ),
    )
}

// ---------------------------------------------------------------- 8

#[allow(clippy::needless_range_loop)]
fn metrics_oracle() -> Outcome {
    let mut r = gen(8);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let c = r.random_range(2..8);
        let n = r.random_range(1..40);
        let preds: Vec<usize> = (0..n).map(|_| r.random_range(0..c)).collect();
        let targets: Vec<usize> = (0..n).map(|_| r.random_range(0..c)).collect();
        let m = precision_recall_f1(&preds, &targets, c).unwrap();
        let mut conf = vec![vec![0usize; c]; c];
        for (p, t) in preds.iter().zip(&targets) {
            conf[*t][*p] += 1;
        }
        let (mut ps, mut rs, mut fs) = (0.0, 0.0, 0.0);
        for k in 0..c {
            let tp = conf[k][k];
            let predicted: usize = (0..c).map(|t| conf[t][k]).sum();
            let actual: usize = conf[k].iter().sum();
            let p = if predicted == 0 {
                0.0
            } else {
                tp as f64 / predicted as f64
            };
            let rc = if actual == 0 { 0.0 } else { tp as f64 / actual as f64 };
            let f = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
            let got = m.per_class[k];
            if got.precision != p || got.recall != rc || got.f1 != f {
                mismatches += 1;
            }
            ps += p;
            rs += rc;
            fs += f;
        }
        let k = c as f64;
        if m.confusion != conf
            || m.macro_avg.precision != ps / k
            || m.macro_avg.recall != rs / k
            || m.macro_avg.f1 != fs / k
        {
            mismatches += 1;
        }
    }
    let cols: Vec<&str> = TABLE_HEADER.split('|').map(str::trim).collect();
    let layout = cols == ["Task", "Precision", "Recall", "F1 score"];
    Outcome::new(
        mismatches == 0 && layout,
        format!("1000 labelings, {mismatches} mismatches against the confusion-matrix oracle; header columns {cols:?}"),
    )
}

// ---------------------------------------------------------------- 9

/// Two Gaussian blobs at 9:1, a linear softmax classifier trained full-batch
/// with Adam; returns minority recall on a fresh draw from the same mixture.
fn toy_minority_recall(seed: u64, weighted: bool) -> f64 {
    let draw = |r: &mut rand_chacha::ChaCha8Rng, n_major: usize, n_minor: usize| {
        let normal = |r: &mut rand_chacha::ChaCha8Rng| -> f64 { StandardNormal.sample(r) };
        let mut x = Vec::new();
        let mut y = Vec::new();
        for k in 0..n_major + n_minor {
            let label = usize::from(k >= n_major);
            let cx = if label == 1 { 1.5 } else { 0.0 };
            x.push(cx + normal(r));
            x.push(normal(r));
            y.push(label);
        }
        (x, y)
    };
    let (x, y) = draw(&mut substream(seed, "toy-train", 0), 180, 20);
    let (xt, yt) = draw(&mut substream(seed, "toy-test", 0), 900, 100);
    let weights = if weighted {
        ClassWeights::from_labels(&y, 2).unwrap()
    } else {
        ClassWeights::uniform(2)
    };
    let w = Tensor::leaf(&[2, 2], vec![0.0; 4], true).unwrap();
    let b = Tensor::leaf(&[2], vec![0.0; 2], true).unwrap();
    let params = [w.clone(), b.clone()];
    let input = Tensor::leaf(&[y.len(), 2], x, false).unwrap();
    let mut state = OptimizerState::new(&params);
    for _ in 0..300 {
        let logits = ops::linear(&input, &w, &b).unwrap();
        let loss = weighted_cross_entropy(&logits, &y, &weights).unwrap();
        ops::mul_const(&loss, 1.0 / y.len() as f64).unwrap().backward().unwrap();
        adam_step(&params, &mut state, 0.05, AdamParams::default()).unwrap();
        w.zero_grad();
        b.zero_grad();
    }
    let test = Tensor::leaf(&[yt.len(), 2], xt, false).unwrap();
    let logits = ops::linear(&test, &w, &b).unwrap().to_vec();
    let preds: Vec<usize> = logits.chunks(2).map(|r| usize::from(r[1] > r[0])).collect();
    precision_recall_f1(&preds, &yt, 2).unwrap().per_class[1].recall
}

fn imbalance() -> Outcome {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..5 {
        let weighted = toy_minority_recall(seed, true);
        let plain = toy_minority_recall(seed, false);
        wins += usize::from(weighted > plain);
        pairs.push(format!("{weighted:.2}/{plain:.2}"));
    }
    Outcome::new(
        wins >= 3,
        format!(
            "minority recall weighted/unweighted per seed [{}]; weighted higher in {wins}/5",
            pairs.join(", ")
        ),
    )
}

fn main() {
    // `cargo test` passes filter arguments; an explicit filter that does not
    // mention this target skips the run.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut results = Vec::new();
    criterion(&mut results, 1, "layer table conformance", table_conformance);
    criterion(&mut results, 2, "gradient correctness", gradient_correctness);
    criterion(&mut results, 3, "objective fidelity", objective_fidelity);
    criterion(&mut results, 4, "schedule and optimizer", schedule_and_optimizer);
    criterion(&mut results, 6, "flavor reduction", flavor_reduction);
    criterion(
        &mut results,
        7,
        "determinism and persistence",
        determinism_and_persistence,
    );
    criterion(&mut results, 8, "metrics oracle", metrics_oracle);
    criterion(&mut results, 9, "imbalance behavior", imbalance);
    criterion(&mut results, 5, "desk-scale overfit", desk_overfit);
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
}
