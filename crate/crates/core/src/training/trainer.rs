use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{split, BatchIterator, Dataset};
use crate::error::{Error, Result};
use crate::fpenv::FlushSubnormals;
use crate::eval::{evaluate_network, Evaluation, LogEntry, RunReport};
use crate::nn::{spectra_tensor, Direction, Optimizer, Parameters, INPUT_LEN};
use crate::scalar::Scalar;
use crate::tensor::{Gradients, Tape, Tensor, Var};
use crate::wdgrl::{critic_objective, interpolates, CriticObjective};

use super::checkpoint::ModelCheckpoint;
use super::config::AdaptConfig;
use super::network::Network;

// Independent random streams derived from one seed.
const STREAM_SOURCE: u64 = 1;
const STREAM_TARGET: u64 = 2;
const STREAM_EPS: u64 = 3;
const STREAM_LABELED: u64 = 4;
const STREAM_PRETRAIN: u64 = 5;
const STREAM_REINIT: u64 = 6;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn stream_seed(seed: u64, id: u64) -> u64 {
    use rand::RngCore;
    stream(seed, id).next_u64()
}

/// Parameters selected during a run, the parameters at its end, and the run log.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: ModelCheckpoint,
    pub last: ModelCheckpoint,
    pub report: RunReport,
}

/// Losses of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub l_c: f64,
    pub l_wd: f64,
    pub l_grad: f64,
}

/// Row indices drawn for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    /// Labeled-target rows mixed into the classification batch.
    pub labeled: Vec<usize>,
}

/// Extractor forward pass recorded for line 12.
pub struct ExtractorPass<T> {
    tape: Tape<T>,
    h: Var,
    vars: Vec<Var>,
    ns: usize,
    nl: usize,
    nt: usize,
}

impl<T: Scalar> ExtractorPass<T> {
    /// Values of `(h_s, h_l, h_t)`; `h_l` and `h_t` are absent when their
    /// rows were not part of the pass.
    pub fn features(&self) -> Result<(Tensor<T>, Option<Tensor<T>>, Option<Tensor<T>>)> {
        let h = self.tape.value(self.h);
        let width = h.shape()[1];
        let d = h.data();
        let part = |start: usize, rows: usize| -> Result<Option<Tensor<T>>> {
            if rows == 0 {
                return Ok(None);
            }
            Tensor::new([rows, width], d[start * width..(start + rows) * width].to_vec()).map(Some)
        };
        let h_s = part(0, self.ns)?.expect("source rows are never empty");
        Ok((h_s, part(self.ns, self.nl)?, part(self.ns + self.nl, self.nt)?))
    }
}

fn grads_for<T: Scalar>(grads: &mut Gradients<T>, vars: &[Var], tape: &Tape<T>) -> Vec<Vec<T>> {
    vars.iter()
        .map(|&v| {
            grads
                .take(v)
                .unwrap_or_else(|| vec![T::zero(); tape.value(v).len()])
        })
        .collect()
}

fn rows_of<'a>(all: &[&'a [f32]], idx: &[usize]) -> Vec<&'a [f32]> {
    idx.iter().map(|&i| all[i]).collect()
}

fn check_finite(iteration: usize, loss: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence {
            iteration,
            loss,
            value,
        })
    }
}

/// State of the three-player loop: extractor, discriminator and critic with
/// their optimizers and batch streams.
pub struct AdaptTrainer<'a, T> {
    cfg: AdaptConfig,
    net: Network<T>,
    opt_f: Optimizer<T>,
    opt_d: Optimizer<T>,
    opt_c: Optimizer<T>,
    source_x: Vec<&'a [f32]>,
    source_y: Vec<usize>,
    target_x: Vec<&'a [f32]>,
    labeled_x: Vec<&'a [f32]>,
    labeled_y: Vec<usize>,
    source_batches: BatchIterator,
    target_batches: BatchIterator,
    labeled_batches: Option<BatchIterator>,
    eps_rng: ChaCha8Rng,
    iteration: usize,
}

impl<'a, T: Scalar> AdaptTrainer<'a, T> {
    /// `labeled` is the optional small labeled-target set of the supervised
    /// variant; target labels, if any, are never read.
    pub fn new(
        source: &'a Dataset,
        target: &'a Dataset,
        labeled: Option<&'a Dataset>,
        cfg: &AdaptConfig,
        init: Network<T>,
    ) -> Result<Self> {
        cfg.validate()?;
        let source_y = source.labels()?;
        let n = cfg.batch_size;
        let mut net = init;
        let width = net.extractor.output_dim(INPUT_LEN)?;
        if net.critic.input_dim() != width {
            return Err(Error::dim(format!(
                "critic expects {} features, extractor yields {width}",
                net.critic.input_dim()
            )));
        }
        if cfg.reinit_discriminator {
            net.discriminator.init(&mut stream(cfg.seed, STREAM_REINIT));
        }
        let (labeled_x, labeled_y, labeled_batches) = match labeled {
            Some(l) if !l.is_empty() => {
                // labeled share = |L| / (|L| + n), at most one half
                let m = l.len().min(n);
                (
                    l.features(),
                    l.labels()?,
                    Some(BatchIterator::new(l.len(), m, stream_seed(cfg.seed, STREAM_LABELED))?),
                )
            }
            _ => (Vec::new(), Vec::new(), None),
        };
        Ok(AdaptTrainer {
            cfg: cfg.clone(),
            net,
            opt_f: Optimizer::new(cfg.optimizer, cfg.lr_main),
            opt_d: Optimizer::new(cfg.optimizer, cfg.lr_main),
            opt_c: Optimizer::new(cfg.optimizer, cfg.lr_critic),
            source_x: source.features(),
            source_y,
            target_x: target.features(),
            labeled_x,
            labeled_y,
            source_batches: BatchIterator::new(source.len(), n, stream_seed(cfg.seed, STREAM_SOURCE))?,
            target_batches: BatchIterator::new(target.len(), n, stream_seed(cfg.seed, STREAM_TARGET))?,
            labeled_batches,
            eps_rng: stream(cfg.seed, STREAM_EPS),
            iteration: 0,
        })
    }

    pub fn network(&self) -> &Network<T> {
        &self.net
    }

    pub fn config(&self) -> &AdaptConfig {
        &self.cfg
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Lines 2-3: a source batch with labels and an unlabeled target batch.
    pub fn sample_batch(&mut self) -> Batch {
        Batch {
            source: self.source_batches.next_batch().to_vec(),
            target: self.target_batches.next_batch().to_vec(),
            labeled: self
                .labeled_batches
                .as_mut()
                .map_or_else(Vec::new, |it| it.next_batch().to_vec()),
        }
    }

    /// Features of the batch under the current (frozen) extractor:
    /// `(h_s, h_t, h_l)`, `h_l` empty without labeled target rows.
    pub fn frozen_features(&self, batch: &Batch) -> Result<(Tensor<T>, Tensor<T>, Option<Tensor<T>>)> {
        let mut rows = rows_of(&self.source_x, &batch.source);
        rows.extend(rows_of(&self.target_x, &batch.target));
        rows.extend(rows_of(&self.labeled_x, &batch.labeled));
        let h = self.net.features(&rows)?;
        let width = h.shape()[1];
        let (ns, nt, nl) = (batch.source.len(), batch.target.len(), batch.labeled.len());
        let d = h.data();
        let h_s = Tensor::new([ns, width], d[..ns * width].to_vec())?;
        let h_t = Tensor::new([nt, width], d[ns * width..(ns + nt) * width].to_vec())?;
        let h_l = if nl > 0 {
            Some(Tensor::new([nl, width], d[(ns + nt) * width..].to_vec())?)
        } else {
            None
        };
        Ok((h_s, h_t, h_l))
    }

    /// Line 9 with given interpolates: one ascent step of θ_c on
    /// `l_wd − ρ·l_grad`. Returns the objective before the step.
    pub fn critic_ascent(
        &mut self,
        h_s: &Tensor<T>,
        h_t: &Tensor<T>,
        h_r: &Tensor<T>,
    ) -> Result<CriticObjective<T>> {
        let obj = critic_objective(h_s, h_t, h_r, &self.net.critic, self.cfg.rho)?;
        let grads = obj.grads.clone().into_vec();
        self.opt_c
            .step(&mut self.net.critic.tensors_mut(), &grads, Direction::Ascent)?;
        Ok(obj)
    }

    /// Lines 4-10: `C` critic steps on frozen features, fresh interpolates
    /// each step. Returns the last pre-step objective (or the objective
    /// without any step when `C = 0`).
    pub fn critic_phase(&mut self, h_s: &Tensor<T>, h_t: &Tensor<T>) -> Result<CriticObjective<T>> {
        if self.cfg.critic_steps == 0 {
            let h_r = interpolates(h_s, h_t, &mut self.eps_rng)?;
            return critic_objective(h_s, h_t, &h_r, &self.net.critic, self.cfg.rho);
        }
        let mut last = None;
        for _ in 0..self.cfg.critic_steps {
            let h_r = interpolates(h_s, h_t, &mut self.eps_rng)?;
            last = Some(self.critic_ascent(h_s, h_t, &h_r)?);
        }
        Ok(last.expect("at least one critic step"))
    }

    fn class_labels(&self, batch: &Batch) -> Vec<usize> {
        let mut y: Vec<usize> = batch.source.iter().map(|&i| self.source_y[i]).collect();
        y.extend(batch.labeled.iter().map(|&i| self.labeled_y[i]));
        y
    }

    /// Line 11: descend θ_d on `l_c` over the classification batch, using
    /// features as constants.
    pub fn discriminator_step(&mut self, h_cls: &Tensor<T>, labels: &[usize]) -> Result<f64> {
        let mut tape = Tape::new();
        let h = tape.constant(h_cls.clone());
        let (p, vars) = self.net.discriminator.forward(&mut tape, h, true)?;
        let loss = tape.cross_entropy(p, labels)?;
        let l_c = tape.value(loss).data()[0].as_f64();
        let mut grads = tape.backward(loss)?;
        let g = grads_for(&mut grads, &vars, &tape);
        self.opt_d
            .step(&mut self.net.discriminator.tensors_mut(), &g, Direction::Descent)?;
        Ok(l_c)
    }

    /// Records the extractor on a tape for line 12, over source, labeled
    /// target and (when `λ > 0`) target rows, in that order. Its output also
    /// serves as the frozen features of lines 4-11, since θ_f does not change
    /// before line 12.
    pub fn extractor_forward(&self, batch: &Batch) -> Result<ExtractorPass<T>> {
        let with_target = self.cfg.lambda != 0.0;
        let mut rows = rows_of(&self.source_x, &batch.source);
        rows.extend(rows_of(&self.labeled_x, &batch.labeled));
        if with_target {
            rows.extend(rows_of(&self.target_x, &batch.target));
        }
        let mut tape = Tape::new();
        let x = tape.constant(spectra_tensor(&rows)?);
        let (h, vars) = self.net.extractor.forward(&mut tape, x, true)?;
        Ok(ExtractorPass {
            tape,
            h,
            vars,
            ns: batch.source.len(),
            nl: batch.labeled.len(),
            nt: if with_target { batch.target.len() } else { 0 },
        })
    }

    /// Line 12: descend θ_f on `l_c + λ·l_wd`, using the current θ_d and θ_c.
    /// Returns `(l_c, l_wd)`; `l_wd` is 0 when `λ = 0`.
    pub fn extractor_step(&mut self, pass: ExtractorPass<T>, batch: &Batch) -> Result<(f64, f64)> {
        let ExtractorPass {
            mut tape,
            h,
            vars,
            ns,
            nl,
            nt,
        } = pass;
        let labels = self.class_labels(batch);
        let h_cls = if nt > 0 { tape.slice_rows(h, 0, ns + nl)? } else { h };
        let (p, _) = self.net.discriminator.forward(&mut tape, h_cls, false)?;
        let ce = tape.cross_entropy(p, &labels)?;
        let l_c = tape.value(ce).data()[0].as_f64();
        let (loss, l_wd) = if nt > 0 {
            let h_s = tape.slice_rows(h, 0, ns)?;
            let h_t = tape.slice_rows(h, ns + nl, ns + nl + nt)?;
            let (s_s, _) = self.net.critic.forward(&mut tape, h_s, false)?;
            let (s_t, _) = self.net.critic.forward(&mut tape, h_t, false)?;
            let m_s = tape.mean(s_s)?;
            let m_t = tape.mean(s_t)?;
            let wd = tape.sub(m_s, m_t)?;
            let l_wd = tape.value(wd).data()[0].as_f64();
            let weighted = tape.scale(wd, T::from_f64(self.cfg.lambda))?;
            (tape.add(ce, weighted)?, l_wd)
        } else {
            (ce, 0.0)
        };
        let mut grads = tape.backward(loss)?;
        let g = grads_for(&mut grads, &vars, &tape);
        self.opt_f
            .step(&mut self.net.extractor.tensors_mut(), &g, Direction::Descent)?;
        Ok((l_c, l_wd))
    }

    /// One full iteration of the loop.
    pub fn step(&mut self) -> Result<StepLosses> {
        let _ftz = FlushSubnormals::new();
        let it = self.iteration + 1;
        let batch = self.sample_batch();
        let pass = self.extractor_forward(&batch)?;
        let (h_s, h_l, h_t) = pass.features()?;
        let h_t = match h_t {
            Some(h_t) => h_t,
            None => self.net.features(&rows_of(&self.target_x, &batch.target))?,
        };
        let obj = self.critic_phase(&h_s, &h_t)?;
        let (l_wd, l_grad) = (obj.wasserstein.as_f64(), obj.penalty.as_f64());
        check_finite(it, "l_wd", l_wd)?;
        check_finite(it, "l_grad", l_grad)?;

        let h_cls = match &h_l {
            None => h_s.clone(),
            Some(h_l) => {
                let mut d = h_s.data().to_vec();
                d.extend_from_slice(h_l.data());
                Tensor::new([h_s.shape()[0] + h_l.shape()[0], h_s.shape()[1]], d)?
            }
        };
        let labels = self.class_labels(&batch);
        let l_c_d = self.discriminator_step(&h_cls, &labels)?;
        check_finite(it, "l_c", l_c_d)?;
        let (l_c, _) = self.extractor_step(pass, &batch)?;
        check_finite(it, "l_c", l_c)?;
        self.iteration = it;
        Ok(StepLosses { l_c, l_wd, l_grad })
    }
}

fn snapshot<T: Scalar>(
    net: &Network<T>,
    config: &[(String, String)],
    iteration: usize,
    accuracy: Option<f64>,
) -> ModelCheckpoint {
    ModelCheckpoint {
        network: net.cast(),
        config: config.to_vec(),
        iteration,
        accuracy,
    }
}

/// Periodic evaluation with best-accuracy selection shared by both loops.
struct Tracker<'d> {
    eval_set: Option<&'d Dataset>,
    config: Vec<(String, String)>,
    report: RunReport,
    best: Option<(ModelCheckpoint, Evaluation)>,
    window: Vec<StepLosses>,
}

impl<'d> Tracker<'d> {
    fn new<T: Scalar>(eval_set: Option<&'d Dataset>, config: Vec<(String, String)>, init: &Network<T>) -> Result<Self> {
        let eval_set = eval_set.filter(|d| d.is_fully_labeled());
        let mut t = Tracker {
            eval_set,
            config,
            report: RunReport::default(),
            best: None,
            window: Vec::new(),
        };
        if let Some(ds) = eval_set {
            let e = evaluate_network(init, ds)?;
            t.report.initial_accuracy = Some(e.accuracy);
            t.best = Some((snapshot(init, &t.config, 0, Some(e.accuracy)), e));
        }
        Ok(t)
    }

    fn record<T: Scalar>(&mut self, iteration: usize, losses: StepLosses, net: &Network<T>, log_now: bool) -> Result<()> {
        self.window.push(losses);
        if !log_now {
            return Ok(());
        }
        let n = self.window.len() as f64;
        let avg = |f: fn(&StepLosses) -> f64| self.window.iter().map(f).sum::<f64>() / n;
        let (l_c, l_wd, l_grad) = (avg(|s| s.l_c), avg(|s| s.l_wd), avg(|s| s.l_grad));
        self.window.clear();
        let accuracy = match self.eval_set {
            Some(ds) => {
                let e = evaluate_network(net, ds)?;
                let improved = self
                    .best
                    .as_ref()
                    .is_none_or(|(_, b)| e.accuracy > b.accuracy);
                if improved {
                    self.best = Some((snapshot(net, &self.config, iteration, Some(e.accuracy)), e.clone()));
                }
                Some(e.accuracy)
            }
            None => None,
        };
        self.report.entries.push(LogEntry {
            iteration,
            l_c,
            l_wd,
            l_grad,
            accuracy,
        });
        self.report.final_accuracy = accuracy;
        Ok(())
    }

    fn finish<T: Scalar>(mut self, net: &Network<T>, iteration: usize) -> TrainOutcome {
        let last = snapshot(net, &self.config, iteration, self.report.final_accuracy);
        let best = match self.best {
            Some((ckpt, e)) => {
                self.report.best_accuracy = Some(e.accuracy);
                self.report.best_iteration = ckpt.iteration;
                self.report.confusion = Some(e.confusion);
                ckpt
            }
            None => {
                self.report.best_iteration = iteration;
                last.clone()
            }
        };
        TrainOutcome {
            best,
            last,
            report: self.report,
        }
    }
}

fn run_loop<T: Scalar>(
    mut trainer: AdaptTrainer<'_, T>,
    eval_set: Option<&Dataset>,
    mode: &str,
) -> Result<TrainOutcome> {
    let _ftz = FlushSubnormals::new();
    let cfg = trainer.config().clone();
    let mut config = cfg.to_pairs();
    config.push(("mode".into(), mode.into()));
    config.push(("precision".into(), T::NAME.into()));
    let mut tracker = Tracker::new(eval_set, config, trainer.network())?;
    for it in 1..=cfg.max_iterations {
        let losses = trainer.step()?;
        let log_now = it % cfg.eval_every == 0 || it == cfg.max_iterations;
        tracker.record(it, losses, trainer.network(), log_now)?;
    }
    let net = trainer.network().clone();
    Ok(tracker.finish(&net, cfg.max_iterations))
}

/// Unsupervised WD-DTL from `init`. Target labels, when present, only drive
/// evaluation and best-checkpoint selection.
pub fn adapt<T: Scalar>(
    source: &Dataset,
    target: &Dataset,
    cfg: &AdaptConfig,
    init: &ModelCheckpoint,
) -> Result<TrainOutcome> {
    let hidden = target.without_labels();
    let trainer = AdaptTrainer::new(source, &hidden, None, cfg, init.network.cast::<T>())?;
    run_loop(trainer, Some(target), "adapt")
}

/// Supervised variant: a few labeled target samples join every
/// classification batch; the Wasserstein term still uses unlabeled target.
pub fn adapt_supervised<T: Scalar>(
    source: &Dataset,
    target_labeled: &Dataset,
    target: &Dataset,
    cfg: &AdaptConfig,
    init: &ModelCheckpoint,
) -> Result<TrainOutcome> {
    let hidden = target.without_labels();
    let trainer = AdaptTrainer::new(source, &hidden, Some(target_labeled), cfg, init.network.cast::<T>())?;
    let mode = if target_labeled.is_empty() { "adapt" } else { "adapt-supervised" };
    run_loop(trainer, Some(target), mode)
}

/// Source-only CNN training on cross-entropy: 80/20 stratified split,
/// θ_f and θ_d trained jointly, best validation checkpoint returned. The
/// critic keeps its initial values.
pub fn pretrain<T: Scalar>(source: &Dataset, cfg: &AdaptConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if !source.is_fully_labeled() {
        return Err(Error::input(format!("{}: pretraining needs a fully labeled source", source.domain)));
    }
    let _ftz = FlushSubnormals::new();
    let (train, val) = split(source, 0.8, stream_seed(cfg.seed, STREAM_PRETRAIN))?;
    let x = train.features();
    let y = train.labels()?;
    let mut batches = BatchIterator::new(train.len(), cfg.batch_size, cfg.seed)?;
    let mut net = Network::<T>::initialized(cfg.seed);
    let mut opt = Optimizer::<T>::new(cfg.optimizer, cfg.lr_main);

    let mut config = cfg.to_pairs();
    config.push(("mode".into(), "pretrain".into()));
    config.push(("precision".into(), T::NAME.into()));
    let mut tracker = Tracker::new(Some(&val), config, &net)?;
    for it in 1..=cfg.max_iterations {
        let idx = batches.next_batch();
        let rows = rows_of(&x, idx);
        let labels: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
        let mut tape = Tape::new();
        let xv = tape.constant(spectra_tensor(&rows)?);
        let (h, mut vars) = net.extractor.forward(&mut tape, xv, true)?;
        let (p, dvars) = net.discriminator.forward(&mut tape, h, true)?;
        vars.extend(dvars);
        let loss = tape.cross_entropy(p, &labels)?;
        let l_c = tape.value(loss).data()[0].as_f64();
        check_finite(it, "l_c", l_c)?;
        let mut grads = tape.backward(loss)?;
        let g = grads_for(&mut grads, &vars, &tape);
        let mut params = net.extractor.tensors_mut();
        params.extend(net.discriminator.tensors_mut());
        opt.step(&mut params, &g, Direction::Descent)?;

        let losses = StepLosses { l_c, l_wd: 0.0, l_grad: 0.0 };
        let log_now = it % cfg.eval_every == 0 || it == cfg.max_iterations;
        tracker.record(it, losses, &net, log_now)?;
    }
    Ok(tracker.finish(&net, cfg.max_iterations))
}
