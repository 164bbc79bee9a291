//! Oracles and fixtures shared by the integration tests and the acceptance
//! harness.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use wdtl::data::{synth_generate, Dataset, SynthConfig};
use wdtl::dsp::fft_magnitude;
use wdtl::nn::{Discriminator, FeatureExtractor, OptimizerKind, Parameters};
use wdtl::tensor::{finite_diff_check, GradReport};
use wdtl::training::{adapt, pretrain, AdaptConfig, AdaptTrainer, Network};
use wdtl::wdgrl::{
    critic_objective, empirical_wasserstein, fit_critic, interpolates_with, w1_empirical_1d, Critic, DEFAULT_RHO,
};
use wdtl::{Tape, Tensor, Var};

pub const FD_STEP: f64 = 1e-5;
pub const FIRST_ORDER_TOL: f64 = 1e-4;
pub const PENALTY_TOL: f64 = 1e-3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform values in `±[min_abs, 1]`.
pub fn rand_tensor(rng: &mut impl Rng, shape: &[usize], min_abs: f64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n)
        .map(|_| {
            let m = rng.random_range(min_abs..1.0);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::from_f64(shape.to_vec(), &data).unwrap()
}

/// Central differences of the scalar built by `build` against the tape's
/// gradient, over every entry of every input.
pub fn tape_check(inputs: &[Tensor<f64>], build: impl Fn(&mut Tape<f64>, &[Var]) -> Var) -> GradReport {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let loss = build(&mut tape, &vars);
    let grads = tape.backward(loss).unwrap();
    let mut analytic = Vec::new();
    for (v, t) in vars.iter().zip(inputs) {
        match grads.get(*v) {
            Some(g) => analytic.extend_from_slice(g),
            None => analytic.extend(std::iter::repeat_n(0.0, t.len())),
        }
    }
    let point: Vec<f64> = inputs.iter().flat_map(|t| t.data().iter().copied()).collect();
    finite_diff_check(&point, &analytic, FD_STEP, |x| {
        let mut tape = Tape::new();
        let mut offset = 0;
        let vars: Vec<Var> = inputs
            .iter()
            .map(|t| {
                let part = Tensor::from_f64(t.shape().to_vec(), &x[offset..offset + t.len()]).unwrap();
                offset += t.len();
                tape.param(part)
            })
            .collect();
        let loss = build(&mut tape, &vars);
        tape.value(loss).data()[0]
    })
}

/// `sum(y ⊙ c)` for a fixed random `c`, so every output entry carries a
/// distinct weight.
pub fn weighted_sum(tape: &mut Tape<f64>, y: Var, c: &Tensor<f64>) -> Var {
    let c = tape.constant(c.clone());
    let p = tape.mul(y, c).unwrap();
    tape.sum(p).unwrap()
}

#[derive(Debug, Clone)]
pub struct GradCase {
    pub name: &'static str,
    pub report: GradReport,
    pub tolerance: f64,
}

impl GradCase {
    pub fn passed(&self) -> bool {
        self.report.is_clean() && self.report.max_rel_error < self.tolerance
    }
}

fn case(name: &'static str, report: GradReport) -> GradCase {
    GradCase {
        name,
        report,
        tolerance: FIRST_ORDER_TOL,
    }
}

/// Pooling inputs whose values are pairwise at least `gap` apart, so no
/// perturbation can swap a window maximum.
fn spaced_tensor(rng: &mut impl Rng, shape: &[usize], gap: f64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| (i as f64 - n as f64 / 2.0) * gap).collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.random_range(0..=i));
    }
    Tensor::from_f64(shape.to_vec(), &vals).unwrap()
}

/// Pre-activations of every critic hidden unit on `h`.
fn critic_preactivations(c: &Critic<f64>, h: &Tensor<f64>) -> Vec<f64> {
    let (hid, inp) = (c.hidden_dim(), c.input_dim());
    let mut z = Vec::new();
    for row in h.data().chunks_exact(inp) {
        for j in 0..hid {
            let w = &c.w1.data()[j * inp..(j + 1) * inp];
            z.push(c.b1.data()[j] + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    z
}

fn critic_params(c: &Critic<f64>) -> Vec<f64> {
    c.named().iter().flat_map(|(_, t)| t.data().to_vec()).collect()
}

fn critic_from(template: &Critic<f64>, x: &[f64]) -> Critic<f64> {
    let mut c = template.clone();
    let mut offset = 0;
    for t in c.tensors_mut() {
        let n = t.len();
        t.data_mut().copy_from_slice(&x[offset..offset + n]);
        offset += n;
    }
    c
}

/// A random critic and feature batches with every hidden pre-activation at
/// least `margin` from the ReLU kink.
pub fn kink_free_critic_setup(
    seed: u64,
    margin: f64,
) -> (Critic<f64>, Tensor<f64>, Tensor<f64>, Tensor<f64>) {
    for attempt in 0.. {
        let mut r = rng(seed.wrapping_add(attempt * 7919));
        let mut critic = Critic::<f64>::zeros(6, 5);
        critic.init(&mut r);
        for b in critic.b1.data_mut() {
            *b = r.random_range(-0.5..0.5);
        }
        let h_s = rand_tensor(&mut r, &[4, 6], 0.0);
        let h_t = rand_tensor(&mut r, &[4, 6], 0.0);
        let eps: Vec<f64> = (0..4).map(|_| r.random_range(0.05..0.95)).collect();
        let h_r = interpolates_with(&h_s, &h_t, &eps).unwrap();
        let all = wdtl::wdgrl::assemble_h(&h_s, &h_t, &h_r).unwrap();
        if critic_preactivations(&critic, &all).iter().all(|z| z.abs() > margin) {
            return (critic, h_s, h_t, h_r);
        }
    }
    unreachable!()
}

/// Finite-difference checks of every differentiable operation in `f64`.
pub fn gradient_cases() -> Vec<GradCase> {
    let mut r = rng(2024);
    let mut out = Vec::new();

    let a = rand_tensor(&mut r, &[3, 4], 0.1);
    let b = rand_tensor(&mut r, &[3, 4], 0.1);
    let c = rand_tensor(&mut r, &[3, 4], 0.1);
    out.push(case(
        "elementwise add/sub/mul/scale/mean",
        tape_check(&[a.clone(), b.clone()], |t, v| {
            let s = t.add(v[0], v[1]).unwrap();
            let d = t.sub(v[0], v[1]).unwrap();
            let m = t.mul(s, d).unwrap();
            let m = t.scale(m, 0.7).unwrap();
            let w = t.constant(c.clone());
            let m = t.mul(m, w).unwrap();
            t.mean(m).unwrap()
        }),
    ));

    out.push(case(
        "relu",
        tape_check(&[a.clone()], |t, v| {
            let y = t.relu(v[0]).unwrap();
            weighted_sum(t, y, &c)
        }),
    ));

    let w6 = rand_tensor(&mut r, &[1, 6], 0.1);
    out.push(case(
        "reshape and slice_rows",
        tape_check(&[a.clone()], |t, v| {
            let y = t.reshape(v[0], &[2, 6]).unwrap();
            let y = t.slice_rows(y, 1, 2).unwrap();
            weighted_sum(t, y, &w6)
        }),
    ));

    let x = rand_tensor(&mut r, &[5, 7], 0.0);
    let w = rand_tensor(&mut r, &[3, 7], 0.0);
    let bias = rand_tensor(&mut r, &[3], 0.0);
    let cy = rand_tensor(&mut r, &[5, 3], 0.0);
    out.push(case(
        "dense",
        tape_check(&[x, w, bias], |t, v| {
            let y = t.dense(v[0], v[1], Some(v[2])).unwrap();
            weighted_sum(t, y, &cy)
        }),
    ));

    let x = rand_tensor(&mut r, &[2, 3, 25], 0.0);
    let w = rand_tensor(&mut r, &[4, 3, 5], 0.0);
    let bias = rand_tensor(&mut r, &[4], 0.0);
    let cy = rand_tensor(&mut r, &[2, 4, 11], 0.0);
    out.push(case(
        "conv1d stride 2",
        tape_check(&[x, w, bias], |t, v| {
            let y = t.conv1d(v[0], v[1], v[2], 2).unwrap();
            weighted_sum(t, y, &cy)
        }),
    ));

    let x = spaced_tensor(&mut r, &[2, 3, 12], 0.01);
    let cy = rand_tensor(&mut r, &[2, 3, 6], 0.0);
    out.push(case(
        "maxpool1d 2/2",
        tape_check(&[x.clone()], |t, v| {
            let y = t.maxpool1d(v[0], 2, 2).unwrap();
            weighted_sum(t, y, &cy)
        }),
    ));
    let cy = rand_tensor(&mut r, &[2, 3, 5], 0.0);
    out.push(case(
        "maxpool1d 3/2 (overlapping)",
        tape_check(&[x], |t, v| {
            let y = t.maxpool1d(v[0], 3, 2).unwrap();
            weighted_sum(t, y, &cy)
        }),
    ));

    let z = rand_tensor(&mut r, &[6, 4], 0.0);
    let labels = [0, 3, 1, 2, 2, 0];
    out.push(case(
        "softmax + cross-entropy",
        tape_check(&[z], |t, v| {
            let p = t.softmax(v[0]).unwrap();
            t.cross_entropy(p, &labels).unwrap()
        }),
    ));

    let (critic, h_s, h_t, h_r) = kink_free_critic_setup(5, 1e-3);
    let cs = rand_tensor(&mut r, &[4, 1], 0.0);
    let mut tensors: Vec<Tensor<f64>> = vec![h_s.clone()];
    tensors.extend(critic.named().into_iter().map(|(_, t)| t.clone()));
    out.push(case(
        "critic scores (θ_c and input)",
        tape_check(&tensors, |t, v| {
            let z = t.dense(v[0], v[1], Some(v[2])).unwrap();
            let a = t.relu(z).unwrap();
            let s = t.dense(a, v[3], Some(v[4])).unwrap();
            weighted_sum(t, s, &cs)
        }),
    ));
    out.push(case("critic input gradient", critic_input_gradient_check(&critic, &h_s)));

    let point = critic_params(&critic);
    let obj = critic_objective(&h_s, &h_t, &h_r, &critic, DEFAULT_RHO).unwrap();
    let analytic: Vec<f64> = obj.grads.clone().into_vec().concat();
    let report = finite_diff_check(&point, &analytic, FD_STEP, |x| {
        critic_objective(&h_s, &h_t, &h_r, &critic_from(&critic, x), DEFAULT_RHO)
            .unwrap()
            .value
    });
    out.push(GradCase {
        name: "critic objective with gradient penalty (θ_c)",
        report,
        tolerance: PENALTY_TOL,
    });
    out
}

fn critic_input_gradient_check(critic: &Critic<f64>, h: &Tensor<f64>) -> GradReport {
    let g = critic.input_gradients(h).unwrap();
    let rows = h.shape()[0];
    let width = h.shape()[1];
    // the sum of scores has per-row input gradient equal to ∇_h r_c(h_i)
    finite_diff_check(h.data(), g.data(), FD_STEP, |x| {
        let t = Tensor::from_f64(vec![rows, width], x).unwrap();
        critic.scores(&t).unwrap().iter().sum()
    })
}

/// Whole network (extractor, discriminator, cross-entropy) in `f64` on a
/// sample of parameter coordinates. Coordinates whose two step sizes
/// disagree sit on a ReLU or pooling kink and are skipped.
pub fn network_gradient_check(seed: u64, coords: usize) -> (GradReport, usize) {
    let net = Network::<f64>::initialized(seed);
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rows: Vec<Vec<f32>> = (0..3)
        .map(|_| (0..wdtl::nn::INPUT_LEN).map(|_| normal.sample(&mut r) as f32).collect())
        .collect();
    let labels = [1usize, 3, 0];
    let loss_of = |ext: &FeatureExtractor<f64>, dis: &Discriminator<f64>, grads: bool| {
        let refs: Vec<&[f32]> = rows.iter().map(Vec::as_slice).collect();
        let mut tape = Tape::new();
        let x = tape.constant(wdtl::nn::spectra_tensor(&refs).unwrap());
        let (h, mut vars) = ext.forward(&mut tape, x, grads).unwrap();
        let (p, dv) = dis.forward(&mut tape, h, grads).unwrap();
        vars.extend(dv);
        let loss = tape.cross_entropy(p, &labels).unwrap();
        let value = tape.value(loss).data()[0];
        let g = grads.then(|| {
            let g = tape.backward(loss).unwrap();
            vars.iter().flat_map(|v| g.get(*v).unwrap().to_vec()).collect::<Vec<f64>>()
        });
        (value, g)
    };
    let (_, g) = loss_of(&net.extractor, &net.discriminator, true);
    let g = g.unwrap();
    let flat: Vec<f64> = net
        .extractor
        .named()
        .iter()
        .chain(net.discriminator.named().iter())
        .flat_map(|(_, t)| t.data().to_vec())
        .collect();
    let picks: Vec<usize> = (0..coords).map(|_| r.random_range(0..flat.len())).collect();
    let numeric_at = |step: f64| -> Vec<f64> {
        let loss_with = |i: usize, delta: f64| {
            let (mut e, mut d) = (net.extractor.clone(), net.discriminator.clone());
            let mut off = 0;
            for t in e.tensors_mut().into_iter().chain(d.tensors_mut()) {
                let n = t.len();
                t.data_mut().copy_from_slice(&flat[off..off + n]);
                if (off..off + n).contains(&i) {
                    t.data_mut()[i - off] += delta;
                }
                off += n;
            }
            loss_of(&e, &d, false).0
        };
        picks
            .iter()
            .map(|&i| (loss_with(i, step) - loss_with(i, -step)) / (2.0 * step))
            .collect()
    };
    let fine = numeric_at(FD_STEP);
    let coarse = numeric_at(4.0 * FD_STEP);
    let mut report = GradReport::default();
    let mut skipped = 0;
    for (k, &i) in picks.iter().enumerate() {
        let entry = wdtl::tensor::GradEntry {
            analytic: g[i],
            numeric: fine[k],
            non_finite: !fine[k].is_finite(),
        };
        let scale = fine[k].abs().max(coarse[k].abs()).max(1e-6);
        if (fine[k] - coarse[k]).abs() / scale > 1e-5 {
            skipped += 1;
            continue;
        }
        report.max_abs_error = report.max_abs_error.max(entry.abs_error());
        report.max_rel_error = report.max_rel_error.max(entry.rel_error());
        report.entries.push(entry);
    }
    (report, skipped)
}

/// Direct `O(N²)` DFT magnitudes with exact angle reduction.
pub fn direct_dft_magnitude(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in x.iter().enumerate() {
                let angle = 2.0 * PI * ((k * j) % n) as f64 / n as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// Largest absolute difference between `fft_magnitude` and the direct DFT
/// over `count` random standard-normal inputs of 2000 samples.
pub fn fft_oracle_max_error(count: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let x: Vec<f64> = (0..2000).map(|_| normal.sample(&mut r)).collect();
        let fast = fft_magnitude(&x).unwrap();
        let slow = direct_dft_magnitude(&x);
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// `(peak bin, peak magnitude)` of a unit 60 Hz cosine sampled at 12 kHz.
pub fn cosine_peak() -> (usize, f64) {
    let x: Vec<f64> = (0..2000)
        .map(|i| (2.0 * PI * 60.0 * i as f64 / 12_000.0).cos())
        .collect();
    let mags = fft_magnitude(&x).unwrap();
    let (bin, &mag) = mags[..1000]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    (bin, mag)
}

/// Critic estimate and exact sorted-sample W1 for `N(d, 1)` against
/// `N(0, 1)`, `n` draws each.
pub fn duality_estimate(d: f64, n: usize, steps: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..n).map(|_| normal.sample(&mut r)).collect();
    let ys: Vec<f64> = (0..n).map(|_| d + normal.sample(&mut r)).collect();
    let h_s = Tensor::<f64>::from_f64(vec![n, 1], &ys).unwrap();
    let h_t = Tensor::<f64>::from_f64(vec![n, 1], &xs).unwrap();
    let mut critic = Critic::<f64>::zeros(1, 128);
    critic.init(&mut r);
    fit_critic(&mut critic, &h_s, &h_t, steps, 1e-3, DEFAULT_RHO, &mut r).unwrap();
    let estimate = empirical_wasserstein(&h_s, &h_t, &critic).unwrap();
    (estimate, w1_empirical_1d(&xs, &ys).unwrap())
}

/// Small source (30 Hz) and target (29 Hz) domains.
pub fn small_domains(n_per_class: usize, seed: u64) -> (Dataset, Dataset) {
    let source = synth_generate(&SynthConfig {
        domain: "source".into(),
        n_per_class,
        seed: seed * 2 + 1,
        ..SynthConfig::default()
    })
    .unwrap();
    let target = synth_generate(&SynthConfig {
        domain: "target".into(),
        n_per_class,
        shaft_hz: 29.0,
        seed: seed * 2 + 2,
        ..SynthConfig::default()
    })
    .unwrap();
    (source, target)
}

pub fn small_config(seed: u64) -> AdaptConfig {
    AdaptConfig {
        batch_size: 8,
        max_iterations: 6,
        eval_every: 3,
        seed,
        ..AdaptConfig::default()
    }
}

/// Which of `[θ_f, θ_d, θ_c]` changed across each line group of one
/// iteration: critic phase, discriminator step, extractor step.
pub fn update_isolation(seed: u64) -> [[bool; 3]; 3] {
    let (source, target) = small_domains(8, seed);
    let hidden = target.without_labels();
    let cfg = small_config(seed);
    let mut trainer =
        AdaptTrainer::<f32>::new(&source, &hidden, None, &cfg, Network::initialized(seed)).unwrap();
    let changed = |a: &[String; 3], b: &[String; 3]| [a[0] != b[0], a[1] != b[1], a[2] != b[2]];

    let batch = trainer.sample_batch();
    let pass = trainer.extractor_forward(&batch).unwrap();
    let (h_s, _, h_t) = pass.features().unwrap();
    let h_t = h_t.unwrap();

    let d0 = trainer.network().digests();
    trainer.critic_phase(&h_s, &h_t).unwrap();
    let d1 = trainer.network().digests();
    let labels = source.labels().unwrap();
    let y: Vec<usize> = batch.source.iter().map(|&i| labels[i]).collect();
    trainer.discriminator_step(&h_s, &y).unwrap();
    let d2 = trainer.network().digests();
    trainer.extractor_step(pass, &batch).unwrap();
    let d3 = trainer.network().digests();
    [changed(&d0, &d1), changed(&d1, &d2), changed(&d2, &d3)]
}

/// Critic objective before each of `steps` ascent steps (fixed
/// interpolates) and after the last, on frozen features.
pub fn critic_trajectory(seed: u64, steps: usize, optimizer: OptimizerKind) -> Vec<f64> {
    let (source, target) = small_domains(8, seed);
    let hidden = target.without_labels();
    let cfg = AdaptConfig {
        lr_critic: 1e-3,
        optimizer,
        ..small_config(seed)
    };
    let mut trainer =
        AdaptTrainer::<f64>::new(&source, &hidden, None, &cfg, Network::initialized(seed)).unwrap();
    let batch = trainer.sample_batch();
    let (h_s, h_t, _) = trainer.frozen_features(&batch).unwrap();
    let mut r = rng(seed);
    let eps: Vec<f64> = (0..h_s.shape()[0]).map(|_| r.random_range(0.0..1.0)).collect();
    let h_r = interpolates_with(&h_s, &h_t, &eps).unwrap();
    let mut values: Vec<f64> = (0..steps)
        .map(|_| trainer.critic_ascent(&h_s, &h_t, &h_r).unwrap().value)
        .collect();
    values.push(critic_objective(&h_s, &h_t, &h_r, &trainer.network().critic, cfg.rho).unwrap().value);
    values
}

/// With `λ = 0` and `C = 0` the loop is plain source training: two runs on
/// different targets end with identical θ_f and θ_d, θ_c is never touched,
/// and θ_f, θ_d do move. Returns a description of the first violation.
pub fn reduction_violation(seed: u64) -> Option<String> {
    let (source, target) = small_domains(8, seed);
    let (_, other_target) = small_domains(8, seed + 100);
    let init = pretrain::<f32>(&source, &small_config(seed)).unwrap().best;
    let cfg = AdaptConfig {
        lambda: 0.0,
        critic_steps: 0,
        ..small_config(seed)
    };
    let a = adapt::<f32>(&source, &target, &cfg, &init).unwrap();
    let b = adapt::<f32>(&source, &other_target, &cfg, &init).unwrap();
    let (da, db, d0) = (a.last.network.digests(), b.last.network.digests(), init.network.digests());
    if da != db {
        return Some("parameters depend on the target".into());
    }
    if da[2] != d0[2] {
        return Some("critic changed".into());
    }
    if da[0] == d0[0] || da[1] == d0[1] {
        return Some("source training did not update θ_f/θ_d".into());
    }
    None
}
