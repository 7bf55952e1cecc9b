//! Training loop: Adam over mini-batches with a cosine temperature schedule.
//!
//! The trainer drives anything implementing [`Model`]; the linear learner,
//! the ReLU baseline, and the nonlinear learner all plug in. Acyclicity is
//! never part of the objective — the exponential-trace value logged per epoch
//! is a diagnostic, computed outside the timed fitting path.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::graph::{trace_expm_minus_d, WeightedAdjacency};
use crate::linear::RegWeights;
use crate::scalar::Scalar;

/// Adam with bias correction over one flat parameter block.
#[derive(Clone, Debug)]
pub struct AdamState<F> {
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
    pub step: usize,
    m: Vec<F>,
    v: Vec<F>,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(n_params: usize, lr: F) -> Self {
        Self {
            lr,
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            eps: F::of(1e-8),
            step: 0,
            m: vec![F::zero(); n_params],
            v: vec![F::zero(); n_params],
        }
    }

    /// One bias-corrected update; `params` and `grads` must match the state
    /// shape.
    pub fn step(&mut self, params: &mut [F], grads: &[F]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch(format!(
                "adam state holds {} params, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let one = F::one();
        let bc1 = one - self.beta1.powi(self.step as i32);
        let bc2 = one - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Cosine temperature schedule over epochs, from `t_start` down to `t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealSchedule<F> {
    pub t_start: F,
    pub t_end: F,
    pub epochs: usize,
}

impl<F: Scalar> AnnealSchedule<F> {
    pub fn new(t_start: F, t_end: F, epochs: usize) -> Result<Self> {
        if !(t_end > F::zero()) || !(t_start > t_end) {
            return Err(Error::InvalidConfig(format!(
                "schedule needs t_start > t_end > 0, got {t_start} and {t_end}"
            )));
        }
        if epochs == 0 {
            return Err(Error::InvalidConfig("schedule needs at least one epoch".into()));
        }
        Ok(Self { t_start, t_end, epochs })
    }
}

/// `t(e) = t_end + (t_start - t_end) * (1 + cos(pi * e / (E - 1))) / 2`:
/// monotone nonincreasing with `t(0) = t_start` and `t(E-1) = t_end`.
pub fn temperature_at<F: Scalar>(sched: &AnnealSchedule<F>, epoch: usize) -> Result<F> {
    if epoch >= sched.epochs {
        return Err(Error::InvalidConfig(format!(
            "epoch {epoch} out of range for a {}-epoch schedule",
            sched.epochs
        )));
    }
    if sched.epochs == 1 {
        return Ok(sched.t_start);
    }
    let progress = F::of(epoch as f64) / F::of((sched.epochs - 1) as f64);
    let half = F::of(0.5);
    Ok(sched.t_end + half * (sched.t_start - sched.t_end) * (F::one() + (F::PI() * progress).cos()))
}

/// Mini-batch training configuration. `shift` seeds the orientation
/// configuration; the temperature comes from the schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig<F> {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: F,
    pub reg: RegWeights<F>,
    pub shift: F,
    pub seed: u64,
    /// Compute the exponential-trace diagnostic of the orientation factor
    /// each epoch. Off the timed path either way.
    pub log_acyclicity: bool,
}

impl<F: Scalar> TrainConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epoch count must be at least 1".into()));
        }
        if !(self.lr > F::zero()) || !self.lr.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(self.shift > F::zero()) {
            return Err(Error::InvalidConfig(format!(
                "shift must be positive, got {}",
                self.shift
            )));
        }
        Ok(())
    }
}

/// Anything the trainer can optimize: exposes flat parameter blocks, a
/// matching gradient computation, and its orientation factor for the
/// per-epoch diagnostic.
pub trait Model<F: Scalar> {
    fn node_count(&self) -> usize;

    /// Updates the orientation temperature (ignored by the ReLU baseline).
    fn set_temperature(&mut self, t: F) -> Result<()>;

    /// Loss and one flat gradient vector per parameter block, in block order.
    fn loss_and_grads_flat(&self, batch: &Mat<F>, reg: &RegWeights<F>) -> Result<(F, Vec<Vec<F>>)>;

    /// Mutable parameter blocks, in the same order as the gradients.
    fn blocks_mut(&mut self) -> Vec<&mut [F]>;

    /// Re-establish invariants after an update (pin self-loop weights).
    fn after_step(&mut self);

    /// The orientation factor as a plain matrix, for the acyclicity
    /// diagnostic.
    fn orientation_matrix(&self) -> Mat<F>;

    /// The sigmoid value at zero priority difference, base of the
    /// `exp(d * alpha) - 1` acyclicity bound.
    fn bound_alpha(&self) -> F;

    /// Arc scores ranked and thresholded by the evaluation metrics.
    fn score_matrix(&self) -> WeightedAdjacency<F>;
}

/// One row of the training history.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub temperature: f64,
    pub loss: f64,
    /// Exponential-trace acyclicity of the orientation factor (NaN when the
    /// diagnostic is disabled).
    pub h_value: f64,
    /// `exp(d * alpha) - 1`.
    pub h_bound: f64,
    /// Cumulative fitting time, excluding diagnostics.
    pub elapsed_ms: f64,
}

/// Final history plus total fitting time in seconds.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    pub fit_seconds: f64,
}

fn gather_rows<F: Scalar>(x: &Mat<F>, idx: &[usize], out: &mut Mat<F>) {
    debug_assert_eq!(out.rows(), idx.len());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(x.row(i));
    }
}

/// One pass over the shuffled data in mini-batches; the last partial batch is
/// used. Returns the mean of the per-batch losses.
fn run_epoch<F: Scalar, M: Model<F>>(
    model: &mut M,
    x: &Mat<F>,
    tc: &TrainConfig<F>,
    adams: &mut [AdamState<F>],
    indices: &mut [usize],
    rng: &mut ChaCha8Rng,
    epoch: usize,
    temperature: F,
) -> Result<F> {
    indices.shuffle(rng);
    let mut loss_sum = 0.0f64;
    let mut batches = 0usize;
    for chunk in indices.chunks(tc.batch_size) {
        let mut batch = Mat::zeros(chunk.len(), x.cols());
        gather_rows(x, chunk, &mut batch);
        let (loss, grads) = model.loss_and_grads_flat(&batch, &tc.reg)?;
        if !loss.is_finite() {
            let grad_norms = grads
                .iter()
                .map(|g| g.iter().map(|&v| (v * v).as_f64()).sum::<f64>().sqrt())
                .collect();
            return Err(Error::NonFiniteLoss {
                epoch,
                temperature: temperature.as_f64(),
                grad_norms,
            });
        }
        let mut blocks = model.blocks_mut();
        debug_assert_eq!(blocks.len(), grads.len());
        for ((adam, block), grad) in adams.iter_mut().zip(blocks.iter_mut()).zip(&grads) {
            adam.step(block, grad)?;
        }
        model.after_step();
        loss_sum += loss.as_f64();
        batches += 1;
    }
    Ok(F::of(loss_sum / batches as f64))
}

/// Full training protocol: per epoch, set the scheduled temperature, shuffle,
/// sweep mini-batches with Adam, and append a history record. Aborts with
/// diagnostics if the loss turns non-finite.
pub fn train<F: Scalar, M: Model<F>>(
    model: &mut M,
    x: &Mat<F>,
    tc: &TrainConfig<F>,
    sched: &AnnealSchedule<F>,
) -> Result<TrainReport> {
    tc.validate()?;
    if sched.epochs != tc.epochs {
        return Err(Error::InvalidConfig(format!(
            "schedule covers {} epochs but the trainer runs {}",
            sched.epochs, tc.epochs
        )));
    }
    if x.cols() != model.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, model has {} nodes",
            x.cols(),
            model.node_count()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::InvalidConfig("training data is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut adams: Vec<AdamState<F>> = model
        .blocks_mut()
        .iter()
        .map(|b| AdamState::new(b.len(), tc.lr))
        .collect();
    let mut indices: Vec<usize> = (0..x.rows()).collect();
    let mut history = Vec::with_capacity(tc.epochs);
    let d = model.node_count();
    let mut fit_elapsed = Duration::ZERO;

    for epoch in 0..tc.epochs {
        let timer = Instant::now();
        let t = temperature_at(sched, epoch)?;
        model.set_temperature(t)?;
        let mean_loss =
            run_epoch(model, x, tc, &mut adams, &mut indices, &mut rng, epoch, t)?;
        fit_elapsed += timer.elapsed();

        // Diagnostics live outside the timed fitting path.
        let h_value = if tc.log_acyclicity {
            trace_expm_minus_d(&model.orientation_matrix())?.as_f64()
        } else {
            f64::NAN
        };
        let h_bound = (F::of(d as f64) * model.bound_alpha()).exp().as_f64() - 1.0;
        history.push(EpochRecord {
            epoch,
            temperature: t.as_f64(),
            loss: mean_loss.as_f64(),
            h_value,
            h_bound,
            elapsed_ms: fit_elapsed.as_secs_f64() * 1e3,
        });
    }

    Ok(TrainReport { history, fit_seconds: fit_elapsed.as_secs_f64() })
}

/// Times the core epoch loop at a fixed temperature: one untimed warmup
/// epoch, then `repetitions` timed epochs. Returns per-epoch milliseconds.
pub fn bench_epoch_ms<F: Scalar, M: Model<F>>(
    model: &mut M,
    x: &Mat<F>,
    tc: &TrainConfig<F>,
    temperature: F,
    repetitions: usize,
) -> Result<Vec<f64>> {
    tc.validate()?;
    if repetitions == 0 {
        return Err(Error::InvalidConfig("benchmark needs at least one repetition".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut adams: Vec<AdamState<F>> = model
        .blocks_mut()
        .iter()
        .map(|b| AdamState::new(b.len(), tc.lr))
        .collect();
    let mut indices: Vec<usize> = (0..x.rows()).collect();
    model.set_temperature(temperature)?;

    run_epoch(model, x, tc, &mut adams, &mut indices, &mut rng, 0, temperature)?;
    let mut times = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let timer = Instant::now();
        run_epoch(model, x, tc, &mut adams, &mut indices, &mut rng, rep, temperature)?;
        times.push(timer.elapsed().as_secs_f64() * 1e3);
    }
    Ok(times)
}
