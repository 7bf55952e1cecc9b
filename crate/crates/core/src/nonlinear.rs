//! Nonlinear learner: one small MLP per variable whose first-layer weights
//! are masked by the smooth orientation, broadcast over hidden units.
//!
//! Network `v` predicts `x[v]` as
//! `w2[v] . sigmoid(x^T M^v) + b[v]`, where `M^v[u][i] = H[u][v][i] * S[u][v]`
//! masks the weight from input `u` into hidden unit `i`. Gradients are
//! hand-derived reverse mode for this fixed two-layer shape.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::graph::WeightedAdjacency;
use crate::linear::{init_priorities, RegWeights};
use crate::orientation::{
    orientation_gradient, smooth_orientation, OrientationConfig, PriorityVector,
    SmoothOrientation,
};
use crate::scalar::Scalar;

/// Trainable state of the nonlinear learner.
///
/// The first-layer tensor is stored network-major:
/// `weight(u, v, i)` is the weight from variable `u` into hidden unit `i`
/// of network `v`, and the slice for one network is contiguous. Self-input
/// slices `weight(v, v, _)` are pinned to zero, the tensor analogue of the
/// zero diagonal of the linear direct matrix.
#[derive(Clone, Debug)]
pub struct NonlinearParams<F> {
    d: usize,
    hidden: usize,
    h: Vec<F>,
    /// Readout weights: row `v` holds the hidden-to-output weights of
    /// network `v`.
    pub w2: Mat<F>,
    /// Output biases, one per network.
    pub b: Vec<F>,
    pub p: PriorityVector<F>,
    pub cfg: OrientationConfig<F>,
}

/// Loss and per-block gradients of the nonlinear learner.
#[derive(Clone, Debug)]
pub struct NlLossAndGrads<F> {
    pub loss: F,
    pub d_h: Vec<F>,
    pub d_w2: Mat<F>,
    pub d_b: Vec<F>,
    pub d_p: Vec<F>,
}

impl<F: Scalar> NonlinearParams<F> {
    /// First-layer weights from `N(0, 0.01)` (a zero tensor is a saddle for
    /// a two-layer network), readout uniform on `(-1/sqrt(h), 1/sqrt(h))`,
    /// biases zero, priorities from the shift-scaled normal.
    pub fn init(d: usize, hidden: usize, cfg: OrientationConfig<F>, rng: &mut impl Rng) -> Self {
        assert!(hidden >= 1, "hidden width must be at least 1");
        let p = init_priorities(d, &cfg, rng);
        let normal = Normal::new(0.0, 0.1).expect("positive std");
        let mut h = vec![F::zero(); d * d * hidden];
        for slot in h.iter_mut() {
            *slot = F::of(normal.sample(rng));
        }
        let bound = 1.0 / (hidden as f64).sqrt();
        let w2 = Mat::from_fn(d, hidden, |_, _| F::of(rng.gen_range(-bound..bound)));
        let b = vec![F::zero(); d];
        let mut params = Self { d, hidden, h, w2, b, p, cfg };
        params.zero_self_weights();
        params
    }

    pub fn node_count(&self) -> usize {
        self.d
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn idx(&self, u: usize, v: usize, i: usize) -> usize {
        (v * self.d + u) * self.hidden + i
    }

    pub fn weight(&self, u: usize, v: usize, i: usize) -> F {
        self.h[self.idx(u, v, i)]
    }

    pub fn set_weight(&mut self, u: usize, v: usize, i: usize, w: F) {
        let idx = self.idx(u, v, i);
        self.h[idx] = w;
    }

    pub fn h_flat(&self) -> &[F] {
        &self.h
    }

    pub fn h_flat_mut(&mut self) -> &mut [F] {
        &mut self.h
    }

    /// Pins every self-input slice to zero.
    pub fn zero_self_weights(&mut self) {
        for v in 0..self.d {
            for i in 0..self.hidden {
                let idx = self.idx(v, v, i);
                self.h[idx] = F::zero();
            }
        }
    }

    /// Masked first-layer matrix of network `v`: `M[u][i] = H[u][v][i] * S[u][v]`.
    fn masked_layer(&self, v: usize, s: &SmoothOrientation<F>) -> Mat<F> {
        Mat::from_fn(self.d, self.hidden, |u, i| self.weight(u, v, i) * s.entry(u, v))
    }

    /// Forward pass: one prediction column per variable.
    pub fn predict(&self, x: &Mat<F>) -> Result<Mat<F>> {
        if x.cols() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} columns, model has {} nodes",
                x.cols(),
                self.d
            )));
        }
        let s = smooth_orientation(&self.p, &self.cfg);
        let rows = x.rows();
        let mut out = Mat::zeros(rows, self.d);
        for v in 0..self.d {
            let m = self.masked_layer(v, &s);
            let hid = sigmoid_mat(&x.matmul(&m)?);
            for r in 0..rows {
                let mut acc = self.b[v];
                for (i, &hv) in hid.row(r).iter().enumerate() {
                    acc += self.w2[(v, i)] * hv;
                }
                out[(r, v)] = acc;
            }
        }
        Ok(out)
    }

    /// Mean squared error over all variables plus the regularizers
    /// (L1 and squared-L2 on the flattened tensor, squared-L2 on `p`),
    /// with reverse-mode gradients for every block.
    pub fn loss_and_grads(&self, x: &Mat<F>, reg: &RegWeights<F>) -> Result<NlLossAndGrads<F>> {
        if x.rows() == 0 {
            return Err(Error::DimensionMismatch("empty batch".into()));
        }
        if x.cols() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} columns, model has {} nodes",
                x.cols(),
                self.d
            )));
        }
        let d = self.d;
        let hidden = self.hidden;
        let rows = x.rows();
        let batch = F::of(rows as f64);
        let s = smooth_orientation(&self.p, &self.cfg);

        let mut mse = F::zero();
        let mut d_h = vec![F::zero(); self.h.len()];
        let mut d_w2 = Mat::zeros(d, hidden);
        let mut d_b = vec![F::zero(); d];
        let mut dl_ds = Mat::zeros(d, d);

        for v in 0..d {
            let m = self.masked_layer(v, &s);
            let hid = sigmoid_mat(&x.matmul(&m)?);

            // Residuals and their upstream gradient.
            let mut dout = vec![F::zero(); rows];
            for r in 0..rows {
                let mut acc = self.b[v];
                for (i, &hv) in hid.row(r).iter().enumerate() {
                    acc += self.w2[(v, i)] * hv;
                }
                let res = acc - x[(r, v)];
                mse += res * res / (F::of(2.0) * batch);
                dout[r] = res / batch;
            }

            // dpre[r][i] = dout[r] * w2[v][i] * hid * (1 - hid)
            let mut dpre = Mat::zeros(rows, hidden);
            for r in 0..rows {
                let hid_row = hid.row(r);
                let dpre_row = dpre.row_mut(r);
                for i in 0..hidden {
                    let hv = hid_row[i];
                    dpre_row[i] = dout[r] * self.w2[(v, i)] * hv * (F::one() - hv);
                    d_w2[(v, i)] += dout[r] * hv;
                }
                d_b[v] += dout[r];
            }

            // dM = X^T dpre; split into the tensor gradient and the
            // orientation gradient accumulator.
            let dm = x.matmul_tn(&dpre)?;
            for u in 0..d {
                let s_uv = s.entry(u, v);
                let mut ds_acc = F::zero();
                for i in 0..hidden {
                    let g = dm[(u, i)];
                    d_h[self.idx(u, v, i)] += g * s_uv;
                    ds_acc += g * self.weight(u, v, i);
                }
                dl_ds[(u, v)] = ds_acc;
            }
        }

        let mut d_p = orientation_gradient(&s, &self.cfg, &dl_ds)?;

        // Regularizers on the flattened tensor and the priorities.
        let two = F::of(2.0);
        let mut l1 = F::zero();
        let mut l2 = F::zero();
        for (g, &hv) in d_h.iter_mut().zip(&self.h) {
            l1 += hv.abs();
            l2 += hv * hv;
            let sign = if hv > F::zero() {
                F::one()
            } else if hv < F::zero() {
                -F::one()
            } else {
                F::zero()
            };
            *g += reg.lambda1 * sign + two * reg.lambda2 * hv;
        }
        let mut p_sq = F::zero();
        for (g, &pv) in d_p.iter_mut().zip(self.p.as_slice()) {
            p_sq += pv * pv;
            *g += two * reg.lambda_p * pv;
        }

        // Self-input slices are pinned, so their gradients are pinned too.
        for v in 0..d {
            for i in 0..hidden {
                d_h[self.idx(v, v, i)] = F::zero();
            }
        }

        let loss = mse + reg.lambda1 * l1 + reg.lambda2 * l2 + reg.lambda_p * p_sq;
        Ok(NlLossAndGrads { loss, d_h, d_w2, d_b, d_p })
    }

    /// Reduces the masked tensor to arc scores:
    /// `score[u][v] = S[u][v] * |H[u][v][.]|_2`, the quantity thresholded
    /// and ranked by the evaluation metrics.
    pub fn score_matrix(&self) -> WeightedAdjacency<F> {
        let s = smooth_orientation(&self.p, &self.cfg);
        let mut w = WeightedAdjacency::zeros(self.d);
        for u in 0..self.d {
            for v in 0..self.d {
                if u == v {
                    continue;
                }
                let norm_sq: F = (0..self.hidden)
                    .map(|i| {
                        let h = self.weight(u, v, i);
                        h * h
                    })
                    .sum();
                w.set_weight(u, v, s.entry(u, v) * norm_sq.sqrt());
            }
        }
        w
    }
}

impl<F: Scalar> crate::optim::Model<F> for NonlinearParams<F> {
    fn node_count(&self) -> usize {
        NonlinearParams::node_count(self)
    }

    fn set_temperature(&mut self, t: F) -> Result<()> {
        self.cfg = self.cfg.with_temperature(t)?;
        Ok(())
    }

    fn loss_and_grads_flat(&self, batch: &Mat<F>, reg: &RegWeights<F>) -> Result<(F, Vec<Vec<F>>)> {
        let out = self.loss_and_grads(batch, reg)?;
        Ok((out.loss, vec![out.d_h, out.d_w2.as_slice().to_vec(), out.d_b, out.d_p]))
    }

    fn blocks_mut(&mut self) -> Vec<&mut [F]> {
        let Self { h, w2, b, p, .. } = self;
        vec![h.as_mut_slice(), w2.as_mut_slice(), b.as_mut_slice(), p.as_mut_slice()]
    }

    fn after_step(&mut self) {
        self.zero_self_weights();
    }

    fn orientation_matrix(&self) -> Mat<F> {
        smooth_orientation(&self.p, &self.cfg).into_mat()
    }

    fn bound_alpha(&self) -> F {
        self.cfg.alpha()
    }

    fn score_matrix(&self) -> WeightedAdjacency<F> {
        NonlinearParams::score_matrix(self)
    }
}

fn sigmoid_mat<F: Scalar>(m: &Mat<F>) -> Mat<F> {
    m.map(|z| {
        if z >= F::zero() {
            F::one() / (F::one() + (-z).exp())
        } else {
            let e = z.exp();
            e / (F::one() + e)
        }
    })
}
