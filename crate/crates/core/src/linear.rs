//! Linear structure learner: parameters `(H, p)`, mean-squared-error loss
//! with L1/L2 regularization, and analytic gradients. The same interface is
//! implemented by the unconstrained ReLU-orientation baseline.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::graph::WeightedAdjacency;
use crate::orientation::{
    compose, orientation_gradient, smooth_orientation, OrientationConfig, PriorityVector,
};
use crate::scalar::Scalar;

/// Regularization coefficients: L1 and squared-L2 on the direct matrix,
/// squared-L2 on the priority vector. All nonnegative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegWeights<F> {
    pub lambda1: F,
    pub lambda2: F,
    pub lambda_p: F,
}

impl<F: Scalar> RegWeights<F> {
    pub fn new(lambda1: F, lambda2: F, lambda_p: F) -> Result<Self> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2), ("lambda_p", lambda_p)] {
            if !(v >= F::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(Self { lambda1, lambda2, lambda_p })
    }

    pub fn zero() -> Self {
        Self { lambda1: F::zero(), lambda2: F::zero(), lambda_p: F::zero() }
    }

    fn penalty(&self, h: &Mat<F>, p: &[F]) -> F {
        let p_sq: F = p.iter().map(|&x| x * x).sum();
        self.lambda1 * h.sum_abs() + self.lambda2 * h.frobenius_sq() + self.lambda_p * p_sq
    }
}

/// Loss value plus gradients for the direct matrix and the priorities.
#[derive(Clone, Debug)]
pub struct LossAndGrads<F> {
    pub loss: F,
    pub d_h: Mat<F>,
    pub d_p: Vec<F>,
}

/// Draws each priority from `N(0, shift^2 / 2)` so that pairwise differences
/// concentrate where the tempered sigmoid has maximum slope.
pub fn init_priorities<F: Scalar>(
    d: usize,
    cfg: &OrientationConfig<F>,
    rng: &mut impl Rng,
) -> PriorityVector<F> {
    let std = cfg.shift().as_f64() / 2f64.sqrt();
    let normal = Normal::new(0.0, std).expect("positive std");
    PriorityVector::new((0..d).map(|_| F::of(normal.sample(rng))).collect())
}

/// Mean squared error of `X ~ X W` over a batch, normalized by `2B`, plus
/// its gradient with respect to `W`.
fn mse_and_dw<F: Scalar>(x: &Mat<F>, w: &Mat<F>) -> Result<(F, Mat<F>)> {
    if x.rows() == 0 {
        return Err(Error::DimensionMismatch("empty batch".into()));
    }
    if x.cols() != w.rows() {
        return Err(Error::DimensionMismatch(format!(
            "batch is {}x{} but W is {}x{}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols()
        )));
    }
    let batch = F::of(x.rows() as f64);
    let mut residual = x.matmul(w)?;
    for i in 0..x.rows() {
        let res_row = residual.row_mut(i);
        for (r, &xv) in res_row.iter_mut().zip(x.row(i)) {
            *r -= xv;
        }
    }
    let mse = residual.frobenius_sq() / (F::of(2.0) * batch);
    let mut dl_dw = x.matmul_tn(&residual)?;
    dl_dw.scale_in_place(F::one() / batch);
    Ok((mse, dl_dw))
}

/// Adds the regularizer gradients to `d_h` / `d_p` in place and returns the
/// penalty value. `sign(0)` is taken as 0.
fn apply_reg<F: Scalar>(reg: &RegWeights<F>, h: &Mat<F>, p: &[F], d_h: &mut Mat<F>, d_p: &mut [F]) -> F {
    let two = F::of(2.0);
    for (g, &hv) in d_h.as_mut_slice().iter_mut().zip(h.as_slice()) {
        *g += reg.lambda1 * signum_zero(hv) + two * reg.lambda2 * hv;
    }
    for (g, &pv) in d_p.iter_mut().zip(p) {
        *g += two * reg.lambda_p * pv;
    }
    reg.penalty(h, p)
}

fn signum_zero<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        F::one()
    } else if x < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

fn zero_diagonal<F: Scalar>(m: &mut Mat<F>) {
    for i in 0..m.rows().min(m.cols()) {
        m[(i, i)] = F::zero();
    }
}

/// Trainable state of the linear learner: direct matrix `H` (diagonal pinned
/// to zero), priority vector `p`, and the orientation configuration whose
/// temperature is scheduled externally.
#[derive(Clone, Debug)]
pub struct CosmoParams<F> {
    pub h: WeightedAdjacency<F>,
    pub p: PriorityVector<F>,
    pub cfg: OrientationConfig<F>,
}

impl<F: Scalar> CosmoParams<F> {
    /// Zero direct matrix, priorities from the shift-scaled normal.
    pub fn init(d: usize, cfg: OrientationConfig<F>, rng: &mut impl Rng) -> Self {
        Self { h: WeightedAdjacency::zeros(d), p: init_priorities(d, &cfg, rng), cfg }
    }

    pub fn node_count(&self) -> usize {
        self.h.node_count()
    }

    /// The learned weighted adjacency `W = H .* S` at the current
    /// temperature.
    pub fn composed(&self) -> WeightedAdjacency<F> {
        let s = smooth_orientation(&self.p, &self.cfg);
        compose(&self.h, &s).expect("H and S share dimensions")
    }

    /// `X_batch * W`.
    pub fn predict(&self, x: &Mat<F>) -> Result<Mat<F>> {
        if x.cols() != self.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} columns, model has {} nodes",
                x.cols(),
                self.node_count()
            )));
        }
        x.matmul(self.composed().as_mat())
    }

    /// Loss `MSE/(2B) + lambda1 |H|_1 + lambda2 |H|_F^2 + lambda_p |p|_2^2`
    /// and gradients with respect to `H` and `p`.
    pub fn loss_and_grads(&self, x: &Mat<F>, reg: &RegWeights<F>) -> Result<LossAndGrads<F>> {
        let s = smooth_orientation(&self.p, &self.cfg);
        let w = compose(&self.h, &s)?;
        let (mse, dl_dw) = mse_and_dw(x, w.as_mat())?;

        let mut d_h = dl_dw.hadamard(s.as_mat())?;
        let dl_ds = dl_dw.hadamard(self.h.as_mat())?;
        let mut d_p = orientation_gradient(&s, &self.cfg, &dl_ds)?;
        let penalty = apply_reg(reg, self.h.as_mat(), self.p.as_slice(), &mut d_h, &mut d_p);
        // The diagonal of H is pinned to zero, so its gradient is pinned too.
        zero_diagonal(&mut d_h);
        Ok(LossAndGrads { loss: mse + penalty, d_h, d_p })
    }
}

/// `max(p[v] - p[u], 0)` for every ordered pair: the ReLU orientation of the
/// baseline. Inherently acyclic, but the priority distance leaks into the
/// arc weight.
pub fn relu_orientation<F: Scalar>(p: &PriorityVector<F>) -> Mat<F> {
    let d = p.len();
    Mat::from_fn(d, d, |u, v| (p.get(v) - p.get(u)).max(F::zero()))
}

/// The unconstrained ReLU-orientation baseline: identical pipeline with the
/// smooth orientation replaced by `ReLU(p[v] - p[u])`. The orientation
/// configuration is kept only for priority initialization; the ReLU has no
/// temperature.
#[derive(Clone, Debug)]
pub struct NocurlUParams<F> {
    pub h: WeightedAdjacency<F>,
    pub p: PriorityVector<F>,
    pub cfg: OrientationConfig<F>,
}

impl<F: Scalar> NocurlUParams<F> {
    /// Unit-scale priorities: the ReLU orientation multiplies the priority
    /// distance into the arc weight, so the shift-scaled init of the sigmoid
    /// learner does not apply here.
    pub fn init(d: usize, cfg: OrientationConfig<F>, rng: &mut impl Rng) -> Self {
        let normal = Normal::new(0.0, 1.0).expect("unit std");
        let p = PriorityVector::new((0..d).map(|_| F::of(normal.sample(rng))).collect());
        Self { h: WeightedAdjacency::zeros(d), p, cfg }
    }

    pub fn node_count(&self) -> usize {
        self.h.node_count()
    }

    pub fn composed(&self) -> WeightedAdjacency<F> {
        let r = relu_orientation(&self.p);
        WeightedAdjacency::from_mat(self.h.as_mat().hadamard(&r).expect("same dims"))
            .expect("square")
    }

    pub fn predict(&self, x: &Mat<F>) -> Result<Mat<F>> {
        if x.cols() != self.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} columns, model has {} nodes",
                x.cols(),
                self.node_count()
            )));
        }
        x.matmul(self.composed().as_mat())
    }

    /// Same objective as the sigmoid learner; the ReLU subgradient at zero is
    /// taken as zero.
    pub fn loss_and_grads(&self, x: &Mat<F>, reg: &RegWeights<F>) -> Result<LossAndGrads<F>> {
        let d = self.node_count();
        let r = relu_orientation(&self.p);
        let w = self.h.as_mat().hadamard(&r)?;
        let (mse, dl_dw) = mse_and_dw(x, &w)?;

        let mut d_h = dl_dw.hadamard(&r)?;
        let mut d_p = vec![F::zero(); d];
        for u in 0..d {
            let mut acc = F::zero();
            for v in 0..d {
                // dW[u][v]/dp[u] = -H[u][v] when p[v] > p[u], else 0.
                if self.p.get(v) - self.p.get(u) > F::zero() {
                    acc -= dl_dw[(u, v)] * self.h.weight(u, v);
                }
                // dW[v][u]/dp[u] = +H[v][u] when p[u] > p[v], else 0.
                if self.p.get(u) - self.p.get(v) > F::zero() {
                    acc += dl_dw[(v, u)] * self.h.weight(v, u);
                }
            }
            d_p[u] = acc;
        }
        let penalty = apply_reg(reg, self.h.as_mat(), self.p.as_slice(), &mut d_h, &mut d_p);
        zero_diagonal(&mut d_h);
        Ok(LossAndGrads { loss: mse + penalty, d_h, d_p })
    }
}

impl<F: Scalar> crate::optim::Model<F> for CosmoParams<F> {
    fn node_count(&self) -> usize {
        CosmoParams::node_count(self)
    }

    fn set_temperature(&mut self, t: F) -> Result<()> {
        self.cfg = self.cfg.with_temperature(t)?;
        Ok(())
    }

    fn loss_and_grads_flat(&self, batch: &Mat<F>, reg: &RegWeights<F>) -> Result<(F, Vec<Vec<F>>)> {
        let out = self.loss_and_grads(batch, reg)?;
        Ok((out.loss, vec![out.d_h.as_slice().to_vec(), out.d_p]))
    }

    fn blocks_mut(&mut self) -> Vec<&mut [F]> {
        vec![self.h.as_mat_mut().as_mut_slice(), self.p.as_mut_slice()]
    }

    fn after_step(&mut self) {
        for i in 0..self.h.node_count() {
            self.h.set_weight(i, i, F::zero());
        }
    }

    fn orientation_matrix(&self) -> Mat<F> {
        smooth_orientation(&self.p, &self.cfg).into_mat()
    }

    fn bound_alpha(&self) -> F {
        self.cfg.alpha()
    }

    fn score_matrix(&self) -> WeightedAdjacency<F> {
        self.composed()
    }
}

impl<F: Scalar> crate::optim::Model<F> for NocurlUParams<F> {
    fn node_count(&self) -> usize {
        NocurlUParams::node_count(self)
    }

    fn set_temperature(&mut self, t: F) -> Result<()> {
        self.cfg = self.cfg.with_temperature(t)?;
        Ok(())
    }

    fn loss_and_grads_flat(&self, batch: &Mat<F>, reg: &RegWeights<F>) -> Result<(F, Vec<Vec<F>>)> {
        let out = self.loss_and_grads(batch, reg)?;
        Ok((out.loss, vec![out.d_h.as_slice().to_vec(), out.d_p]))
    }

    fn blocks_mut(&mut self) -> Vec<&mut [F]> {
        vec![self.h.as_mat_mut().as_mut_slice(), self.p.as_mut_slice()]
    }

    fn after_step(&mut self) {
        for i in 0..self.h.node_count() {
            self.h.set_weight(i, i, F::zero());
        }
    }

    fn orientation_matrix(&self) -> Mat<F> {
        relu_orientation(&self.p)
    }

    // The ReLU orientation is acyclic outright, so the sigmoid bound is
    // vacuously valid; reported for column parity with the sigmoid models.
    fn bound_alpha(&self) -> F {
        self.cfg.alpha()
    }

    fn score_matrix(&self) -> WeightedAdjacency<F> {
        self.composed()
    }
}
