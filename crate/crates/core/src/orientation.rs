//! Priority vectors, the tempered-shifted sigmoid, hard and smooth
//! orientation matrices, and their analytic priority derivatives.
//!
//! A priority vector `p` induces the strict partial order
//! `u < v  <=>  p[v] - p[u] >= shift`. Hard orientations binarize that
//! comparison; smooth orientations replace it with a tempered sigmoid of the
//! pairwise difference, which converges to the hard orientation as the
//! temperature goes to zero.

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::graph::{BinaryAdjacency, WeightedAdjacency};
use crate::scalar::Scalar;

/// Node priorities; finite real values, one per node.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorityVector<F> {
    values: Vec<F>,
}

impl<F: Scalar> PriorityVector<F> {
    pub fn new(values: Vec<F>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, u: usize) -> F {
        self.values[u]
    }

    pub fn set(&mut self, u: usize, v: F) {
        self.values[u] = v;
    }

    pub fn as_slice(&self) -> &[F] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.values
    }
}

/// Sigmoid shift (strict-order threshold) and temperature; both strictly
/// positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientationConfig<F> {
    temperature: F,
    shift: F,
}

impl<F: Scalar> OrientationConfig<F> {
    pub fn new(temperature: F, shift: F) -> Result<Self> {
        if !(temperature > F::zero()) || !temperature.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "temperature must be strictly positive, got {temperature}"
            )));
        }
        if !(shift > F::zero()) || !shift.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "shift must be strictly positive, got {shift}"
            )));
        }
        Ok(Self { temperature, shift })
    }

    pub fn temperature(&self) -> F {
        self.temperature
    }

    pub fn shift(&self) -> F {
        self.shift
    }

    /// Same shift at a different temperature.
    pub fn with_temperature(&self, temperature: F) -> Result<Self> {
        Self::new(temperature, self.shift)
    }

    /// The sigmoid value at a zero priority difference,
    /// `sigma(-shift / temperature)`: the constant diagonal of every smooth
    /// orientation under this configuration.
    pub fn alpha(&self) -> F {
        logistic(-self.shift / self.temperature)
    }
}

/// Numerically stable logistic function; saturates cleanly to 0 or 1 for
/// extreme arguments instead of overflowing.
fn logistic<F: Scalar>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

/// The shift-centered tempered sigmoid
/// `sigma((x - shift) / temperature)`, in (0, 1).
pub fn tempered_sigmoid<F: Scalar>(x: F, cfg: &OrientationConfig<F>) -> F {
    logistic((x - cfg.shift) / cfg.temperature)
}

/// Binary orientation of the strict partial order: arc `u -> v` iff
/// `p[v] - p[u] >= shift`. Acyclic for every priority vector, since any
/// directed cycle would need priority differences that are each at least
/// `shift > 0` yet sum to zero.
pub fn hard_orientation<F: Scalar>(p: &PriorityVector<F>, shift: F) -> BinaryAdjacency {
    assert!(shift > F::zero(), "shift must be strictly positive");
    let d = p.len();
    let mut a = BinaryAdjacency::empty(d);
    for u in 0..d {
        for v in 0..d {
            if p.get(v) - p.get(u) >= shift {
                a.set_arc(u, v, true);
            }
        }
    }
    a
}

/// Entrywise tempered sigmoid of pairwise priority differences. Entries lie
/// in (0, 1); the diagonal is the constant [`OrientationConfig::alpha`].
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothOrientation<F> {
    s: Mat<F>,
}

impl<F: Scalar> SmoothOrientation<F> {
    pub fn node_count(&self) -> usize {
        self.s.rows()
    }

    pub fn entry(&self, u: usize, v: usize) -> F {
        self.s[(u, v)]
    }

    pub fn as_mat(&self) -> &Mat<F> {
        &self.s
    }

    pub fn into_mat(self) -> Mat<F> {
        self.s
    }
}

/// Builds the smooth orientation matrix `S[u][v] = sigma_{t,shift}(p[v] - p[u])`.
pub fn smooth_orientation<F: Scalar>(
    p: &PriorityVector<F>,
    cfg: &OrientationConfig<F>,
) -> SmoothOrientation<F> {
    let d = p.len();
    let s = Mat::from_fn(d, d, |u, v| tempered_sigmoid(p.get(v) - p.get(u), cfg));
    SmoothOrientation { s }
}

/// Elementwise product of a direct matrix with a smooth orientation:
/// the learned weighted adjacency `W = H .* S`.
pub fn compose<F: Scalar>(
    h: &WeightedAdjacency<F>,
    s: &SmoothOrientation<F>,
) -> Result<WeightedAdjacency<F>> {
    let w = h.as_mat().hadamard(s.as_mat())?;
    WeightedAdjacency::from_mat(w)
}

/// Gradient of a loss with respect to the priorities, given the loss gradient
/// with respect to the orientation entries themselves.
///
/// With `g(s) = s * (1 - s)` and `S[u][v] = sigma_{t,shift}(p[v] - p[u])`:
///
/// ```text
/// dL/dp[u] = sum_v ( -dL/dS[u][v] * g(S[u][v]) + dL/dS[v][u] * g(S[v][u]) ) / t
/// ```
pub fn orientation_gradient<F: Scalar>(
    s: &SmoothOrientation<F>,
    cfg: &OrientationConfig<F>,
    dl_ds: &Mat<F>,
) -> Result<Vec<F>> {
    let d = s.node_count();
    if dl_ds.rows() != d || dl_ds.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "orientation gradient: dL/dS is {}x{}, expected {d}x{d}",
            dl_ds.rows(),
            dl_ds.cols()
        )));
    }
    let inv_t = F::one() / cfg.temperature();
    let mut grad = vec![F::zero(); d];
    for u in 0..d {
        let mut acc = F::zero();
        for v in 0..d {
            let s_uv = s.entry(u, v);
            let s_vu = s.entry(v, u);
            acc += dl_ds[(v, u)] * s_vu * (F::one() - s_vu)
                - dl_ds[(u, v)] * s_uv * (F::one() - s_uv);
        }
        grad[u] = acc * inv_t;
    }
    Ok(grad)
}

/// Gradient of a loss with respect to the priorities under the composed model
/// `W = H .* S_{t,shift}(p)`, given `dL/dW`. Chains through the composition:
/// `dL/dS = dL/dW .* H`.
pub fn priority_gradient<F: Scalar>(
    h: &WeightedAdjacency<F>,
    p: &PriorityVector<F>,
    cfg: &OrientationConfig<F>,
    dl_dw: &Mat<F>,
) -> Result<Vec<F>> {
    if h.node_count() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "priority gradient: H is {0}x{0} but p has length {1}",
            h.node_count(),
            p.len()
        )));
    }
    let s = smooth_orientation(p, cfg);
    let dl_ds = dl_dw.hadamard(h.as_mat())?;
    orientation_gradient(&s, cfg, &dl_ds)
}

/// Upper bound `exp(d * alpha) - 1` on the exponential-trace acyclicity of
/// any smooth orientation with `d` nodes under `cfg`, where
/// `alpha = sigma(-shift / temperature)`. Monotone increasing in the
/// temperature, which is what makes annealing tighten it.
pub fn acyclicity_upper_bound<F: Scalar>(cfg: &OrientationConfig<F>, d: usize) -> F {
    (F::of(d as f64) * cfg.alpha()).exp() - F::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_dag, threshold};

    fn cfg(t: f64, shift: f64) -> OrientationConfig<f64> {
        OrientationConfig::new(t, shift).unwrap()
    }

    /// The worked example priorities from the five-node illustration.
    fn example_priorities() -> PriorityVector<f64> {
        PriorityVector::new(vec![4.2, 4.1, 2.0, -0.4, 1.9])
    }

    #[test]
    fn sigmoid_center_is_half() {
        for &t in &[0.45, 0.1, 1e-3] {
            let c = cfg(t, 0.01);
            assert_eq!(tempered_sigmoid(0.01, &c), 0.5);
        }
    }

    #[test]
    fn sigmoid_matches_direct_evaluation() {
        // x = 0, t = 0.45, shift = 0.01: sigma(-1/45).
        let c = cfg(0.45, 0.01);
        let direct = 1.0 / (1.0 + (0.01f64 / 0.45).exp());
        let got = tempered_sigmoid(0.0, &c);
        assert!((got - direct).abs() < 1e-15);
        assert!((got - 0.494_445).abs() < 1e-6);
    }

    #[test]
    fn sigmoid_ten_temperatures_above_center() {
        let c = cfg(0.45, 0.01);
        let got = tempered_sigmoid(0.01 + 10.0 * 0.45, &c);
        assert!((got - 0.999_954_6).abs() < 1e-7);
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        let c = cfg(1e-4, 0.01);
        assert_eq!(tempered_sigmoid(1.0, &c), 1.0);
        assert_eq!(tempered_sigmoid(-1.0, &c), 0.0);
        // |x - shift| / t up to 1e4 stays finite and ordered.
        let lo = tempered_sigmoid(0.01 - 1.0, &c);
        let hi = tempered_sigmoid(0.01 + 1.0, &c);
        assert!(lo >= 0.0 && hi <= 1.0 && lo < hi);
    }

    #[test]
    fn config_rejects_non_positive_parameters() {
        assert!(OrientationConfig::new(0.0, 0.01).is_err());
        assert!(OrientationConfig::new(-1.0, 0.01).is_err());
        assert!(OrientationConfig::new(0.45, 0.0).is_err());
        assert!(OrientationConfig::new(f64::NAN, 0.01).is_err());
    }

    #[test]
    fn hard_orientation_of_example_priorities() {
        // Priorities order the nodes as 3 < 4 < 2 < 1 < 0 with minimum gap
        // 0.1, so every ordered pair clears shift = 0.01: the full transitive
        // tournament, ten arcs.
        let t = hard_orientation(&example_priorities(), 0.01);
        let expected = BinaryAdjacency::from_arcs(
            5,
            &[
                (3, 0), (3, 1), (3, 2), (3, 4),
                (4, 0), (4, 1), (4, 2),
                (2, 0), (2, 1),
                (1, 0),
            ],
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn constant_priorities_give_empty_orientation() {
        let p = PriorityVector::new(vec![1.3; 6]);
        assert_eq!(hard_orientation(&p, 0.01).arc_count(), 0);
    }

    #[test]
    fn permutation_priorities_give_transitive_tournament() {
        // p[u] = shift * rank(u) makes every ordered pair with higher rank
        // reachable; the result must be acyclic and consistent with the rank.
        let shift = 0.25;
        let rank = [2usize, 0, 4, 1, 3];
        let p = PriorityVector::new(rank.iter().map(|&r| shift * r as f64).collect());
        let t = hard_orientation(&p, shift);
        assert!(is_dag(&t));
        for u in 0..5 {
            for v in 0..5 {
                assert_eq!(t.arc(u, v), rank[v] > rank[u]);
            }
        }
    }

    #[test]
    fn smooth_orientation_constant_priorities_is_all_alpha() {
        let c = cfg(0.45, 0.01);
        let p = PriorityVector::new(vec![0.0, 0.0]);
        let s = smooth_orientation(&p, &c);
        for u in 0..2 {
            for v in 0..2 {
                assert_eq!(s.entry(u, v), c.alpha());
            }
        }
    }

    #[test]
    fn smooth_orientation_thresholded_matches_hard_at_tiny_temperature() {
        let c = cfg(1e-6, 0.01);
        let p = example_priorities();
        let s = smooth_orientation(&p, &c);
        let hard = hard_orientation(&p, 0.01);
        for u in 0..p.len() {
            for v in 0..p.len() {
                assert_eq!(s.entry(u, v) > 0.5, hard.arc(u, v));
            }
        }
    }

    #[test]
    fn limit_consistency_against_hard_orientation() {
        let c = cfg(1e-6, 0.01);
        let p = PriorityVector::new(vec![0.7, -0.2, 0.0105, 0.3, -1.4]);
        let s = smooth_orientation(&p, &c);
        let hard = hard_orientation(&p, 0.01);
        for u in 0..p.len() {
            for v in 0..p.len() {
                let gap = (p.get(v) - p.get(u) - 0.01).abs();
                if gap > 1e-4 {
                    let t_uv = if hard.arc(u, v) { 1.0 } else { 0.0 };
                    assert!((s.entry(u, v) - t_uv).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn compose_trivial_cases() {
        let c = cfg(0.45, 0.01);
        let p = PriorityVector::new(vec![0.0; 3]);
        let s = smooth_orientation(&p, &c);

        let ones = WeightedAdjacency::from_mat(Mat::from_fn(3, 3, |_, _| 1.0)).unwrap();
        let w = compose(&ones, &s).unwrap();
        for u in 0..3 {
            for v in 0..3 {
                assert_eq!(w.weight(u, v), c.alpha());
            }
        }

        let zero = WeightedAdjacency::zeros(3);
        let w = compose(&zero, &s).unwrap();
        assert!(w.as_mat().as_slice().iter().all(|&x| x == 0.0));

        let wrong = WeightedAdjacency::zeros(4);
        assert!(compose(&wrong, &s).is_err());
    }

    #[test]
    fn composed_threshold_is_acyclic_at_tiny_temperature() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let c = cfg(1e-6, 0.01);
        for _ in 0..200 {
            let d = rng.gen_range(2..10);
            let p = PriorityVector::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let h = WeightedAdjacency::from_mat(Mat::from_fn(d, d, |_, _| {
                rng.gen_range(-2.0..2.0)
            }))
            .unwrap();
            let w = compose(&h, &smooth_orientation(&p, &c)).unwrap();
            assert!(is_dag(&threshold(&w, 1e-6)));
        }
    }

    #[test]
    fn zero_direct_matrix_gives_zero_priority_gradient() {
        let c = cfg(0.3, 0.01);
        let p = PriorityVector::new(vec![0.4, -0.1, 0.2]);
        let h = WeightedAdjacency::zeros(3);
        let dl_dw = Mat::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
        let g = priority_gradient(&h, &p, &c, &dl_dw).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    /// Central finite differences of a linear functional of the composed
    /// weights, against the analytic priority gradient.
    #[test]
    fn priority_gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let c = cfg(0.3, 0.01);
        for _ in 0..50 {
            let d = rng.gen_range(2..6);
            let p = PriorityVector::new((0..d).map(|_| rng.gen_range(-0.5..0.5)).collect());
            let h = WeightedAdjacency::from_mat(Mat::from_fn(d, d, |_, _| {
                rng.gen_range(-1.5..1.5)
            }))
            .unwrap();
            let coef = Mat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));

            let value = |p: &PriorityVector<f64>| -> f64 {
                let w = compose(&h, &smooth_orientation(p, &c)).unwrap();
                let mut acc = 0.0;
                for u in 0..d {
                    for v in 0..d {
                        acc += coef[(u, v)] * w.weight(u, v);
                    }
                }
                acc
            };

            let analytic = priority_gradient(&h, &p, &c, &coef).unwrap();
            let step = 1e-6;
            for u in 0..d {
                let mut plus = p.clone();
                plus.set(u, p.get(u) + step);
                let mut minus = p.clone();
                minus.set(u, p.get(u) - step);
                let fd = (value(&plus) - value(&minus)) / (2.0 * step);
                let denom = fd.abs().max(1e-12);
                assert!(
                    (analytic[u] - fd).abs() / denom < 1e-6
                        || (analytic[u] - fd).abs() < 1e-10,
                    "d={d} u={u}: analytic {} vs fd {fd}",
                    analytic[u]
                );
            }
        }
    }

    /// Deep saturation kills the priority gradient; with every pairwise
    /// difference at least 100 temperatures away from the shift the sigmoid
    /// slope factor is below exp(-100)/t, so the whole gradient vanishes.
    #[test]
    fn priority_gradient_vanishes_under_saturation() {
        let c = cfg(1e-4, 0.01);
        // Pairwise gaps are multiples of 0.05, i.e. at least 400 temperatures
        // away from the shift on either side.
        let p = PriorityVector::new(vec![0.0, 0.05, 0.10, 0.15]);
        let h = WeightedAdjacency::from_mat(Mat::from_fn(4, 4, |_, _| 1.0)).unwrap();
        let dl_dw = Mat::from_fn(4, 4, |_, _| 1.0);
        let g = priority_gradient(&h, &p, &c, &dl_dw).unwrap();
        let norm: f64 = g.iter().map(|&x| x * x).sum::<f64>().sqrt();
        assert!(norm < 1e-30, "norm = {norm}");
    }

    #[test]
    fn upper_bound_scalar_example() {
        let c = cfg(0.45, 0.01);
        let bound = acyclicity_upper_bound(&c, 3);
        let alpha = 1.0 / (1.0 + (0.01f64 / 0.45).exp());
        assert!((c.alpha() - alpha).abs() < 1e-15);
        assert!((bound - ((3.0 * alpha).exp() - 1.0)).abs() < 1e-12);
        assert!((bound - 3.4073).abs() < 1e-3);
    }

    #[test]
    fn upper_bound_vanishes_as_shift_dominates() {
        let c = cfg(1e-9, 1.0);
        assert_eq!(acyclicity_upper_bound(&c, 10), 0.0);
    }

    #[test]
    fn upper_bound_monotone_in_temperature() {
        let mut last = 0.0;
        for &t in &[1e-3, 1e-2, 0.1, 0.45, 1.0, 10.0] {
            let b = acyclicity_upper_bound(&cfg(t, 0.01), 7);
            assert!(b >= last);
            last = b;
        }
    }
}
