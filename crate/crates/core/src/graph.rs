//! Dense adjacency-matrix graphs, DAG verification, topological ordering,
//! and the trace-of-matrix-exponential acyclicity functional.
//!
//! The exponential-trace functional is used here strictly as a verification
//! oracle; the learner itself never evaluates it.

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Unweighted directed graph as a dense boolean adjacency matrix.
/// `arc(u, v)` means an arc from `u` to `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryAdjacency {
    d: usize,
    entries: Vec<bool>,
}

impl BinaryAdjacency {
    pub fn empty(d: usize) -> Self {
        Self { d, entries: vec![false; d * d] }
    }

    pub fn from_arcs(d: usize, arcs: &[(usize, usize)]) -> Self {
        let mut a = Self::empty(d);
        for &(u, v) in arcs {
            a.set_arc(u, v, true);
        }
        a
    }

    pub fn node_count(&self) -> usize {
        self.d
    }

    pub fn arc(&self, u: usize, v: usize) -> bool {
        self.entries[u * self.d + v]
    }

    pub fn set_arc(&mut self, u: usize, v: usize, present: bool) {
        self.entries[u * self.d + v] = present;
    }

    pub fn arc_count(&self) -> usize {
        self.entries.iter().filter(|&&b| b).count()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.d)
            .flat_map(move |u| (0..self.d).map(move |v| (u, v)))
            .filter(move |&(u, v)| self.arc(u, v))
    }

    fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.d];
        for (_, v) in self.arcs() {
            deg[v] += 1;
        }
        deg
    }
}

/// Weighted directed graph; a zero entry means an absent arc.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedAdjacency<F> {
    mat: Mat<F>,
}

impl<F: Scalar> WeightedAdjacency<F> {
    pub fn zeros(d: usize) -> Self {
        Self { mat: Mat::zeros(d, d) }
    }

    /// Wraps a square matrix of arc weights.
    pub fn from_mat(mat: Mat<F>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "adjacency matrix must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        Ok(Self { mat })
    }

    pub fn node_count(&self) -> usize {
        self.mat.rows()
    }

    pub fn weight(&self, u: usize, v: usize) -> F {
        self.mat[(u, v)]
    }

    pub fn set_weight(&mut self, u: usize, v: usize, w: F) {
        self.mat[(u, v)] = w;
    }

    pub fn as_mat(&self) -> &Mat<F> {
        &self.mat
    }

    pub fn as_mat_mut(&mut self) -> &mut Mat<F> {
        &mut self.mat
    }

    /// Support of the weight matrix as a binary graph.
    pub fn support(&self) -> BinaryAdjacency {
        let d = self.node_count();
        let mut a = BinaryAdjacency::empty(d);
        for u in 0..d {
            for v in 0..d {
                if self.weight(u, v) != F::zero() {
                    a.set_arc(u, v, true);
                }
            }
        }
        a
    }
}

/// Result of peeling a directed graph: either a topological order or the set
/// of nodes left over once no source remains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopologicalOrder {
    /// `order[i]` is the node in position `i`; every arc points forward.
    Order(Vec<usize>),
    /// Nodes that survive source-peeling; they all lie on or behind a cycle.
    Cycle(Vec<usize>),
}

/// Kahn-style source peeling. Runs in O(d^2) on the dense matrix.
pub fn topological_order(a: &BinaryAdjacency) -> TopologicalOrder {
    let d = a.node_count();
    let mut deg = a.in_degrees();
    let mut removed = vec![false; d];
    let mut order = Vec::with_capacity(d);
    // Smallest-index-first peeling keeps the output deterministic.
    let mut queue: Vec<usize> = (0..d).filter(|&v| deg[v] == 0).collect();
    queue.sort_unstable();
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        removed[u] = true;
        order.push(u);
        for v in 0..d {
            if a.arc(u, v) {
                deg[v] -= 1;
                if deg[v] == 0 {
                    queue.push(v);
                }
            }
        }
    }
    if order.len() == d {
        TopologicalOrder::Order(order)
    } else {
        TopologicalOrder::Cycle((0..d).filter(|&v| !removed[v]).collect())
    }
}

/// True iff the graph has no directed cycle.
pub fn is_dag(a: &BinaryAdjacency) -> bool {
    matches!(topological_order(a), TopologicalOrder::Order(_))
}

/// Binarizes weights: an arc is kept when `|w| > omega`.
pub fn threshold<F: Scalar>(w: &WeightedAdjacency<F>, omega: F) -> BinaryAdjacency {
    assert!(omega > F::zero(), "threshold must be positive");
    let d = w.node_count();
    let mut a = BinaryAdjacency::empty(d);
    for u in 0..d {
        for v in 0..d {
            if w.weight(u, v).abs() > omega {
                a.set_arc(u, v, true);
            }
        }
    }
    a
}

/// `trace(exp(M)) - d` for a square matrix, by scaling-and-squaring with a
/// truncated Taylor series.
///
/// The series on the scaled matrix is summed until the one-norm of the next
/// term drops below 1e-14 relative to the accumulated sum, so the truncation
/// error is negligible against the doubling steps' rounding.
pub fn trace_expm_minus_d<F: Scalar>(m: &Mat<F>) -> Result<F> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix exponential of {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix exponential input".into()));
    }
    let d = m.rows();
    if d == 0 {
        return Ok(F::zero());
    }

    // Scale so the one-norm is at most 1/2, then square back.
    let norm = m.norm_one().as_f64();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = F::of(0.5f64.powi(squarings as i32));
    let scaled = m.map(|x| x * scale);

    let mut sum = Mat::<F>::identity(d);
    let mut term = Mat::<F>::identity(d);
    let tol = F::of(1e-14);
    for k in 1..200 {
        term = term.matmul(&scaled)?;
        term.scale_in_place(F::one() / F::of(k as f64));
        sum.add_assign(&term);
        if term.norm_one() < tol * sum.norm_one() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum)?;
    }
    Ok(sum.trace() - F::of(d as f64))
}

/// The exponential-trace acyclicity functional
/// `trace(exp(W .* W)) - d`: zero exactly on acyclic weight matrices,
/// strictly positive in the presence of a weighted cycle.
pub fn notears_h<F: Scalar>(w: &WeightedAdjacency<F>) -> Result<F> {
    if !w.as_mat().is_finite() {
        return Err(Error::NonFinite("acyclicity functional input".into()));
    }
    let squared = w.as_mat().map(|x| x * x);
    trace_expm_minus_d(&squared)
}
