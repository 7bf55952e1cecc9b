//! Structure-recovery metrics: arc-level error counts, normalized Hamming
//! distance, TPR/FPR over ordered pairs, and rank-statistic ROC AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{threshold, BinaryAdjacency, WeightedAdjacency};
use crate::scalar::Scalar;

/// Arc-level disagreement counts between a predicted and a true graph.
///
/// A true arc `u -> v` is `missing` when the prediction has neither
/// direction, and `reversed` when the prediction has only `v -> u`
/// (counted once, not as an extra plus a missing). A predicted arc is
/// `extra` when the truth has no arc in either direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralErrors {
    pub missing: usize,
    pub extra: usize,
    pub reversed: usize,
}

pub fn structural_errors(
    pred: &BinaryAdjacency,
    truth: &BinaryAdjacency,
) -> Result<StructuralErrors> {
    let d = check_same_size(pred, truth)?;
    let mut out = StructuralErrors { missing: 0, extra: 0, reversed: 0 };
    for u in 0..d {
        for v in 0..d {
            if truth.arc(u, v) {
                if !pred.arc(u, v) {
                    if pred.arc(v, u) {
                        out.reversed += 1;
                    } else {
                        out.missing += 1;
                    }
                }
            } else if pred.arc(u, v) && !truth.arc(v, u) {
                out.extra += 1;
            }
        }
    }
    Ok(out)
}

/// Normalized Hamming distance: `(missing + extra + reversed) / d`.
pub fn nhd(pred: &BinaryAdjacency, truth: &BinaryAdjacency) -> Result<f64> {
    let d = check_same_size(pred, truth)?;
    let errs = structural_errors(pred, truth)?;
    Ok((errs.missing + errs.extra + errs.reversed) as f64 / d as f64)
}

/// True- and false-positive rates over ordered pairs (diagonal excluded).
/// Errors when the truth has no positive or no negative pairs.
pub fn tpr_fpr(pred: &BinaryAdjacency, truth: &BinaryAdjacency) -> Result<(f64, f64)> {
    let d = check_same_size(pred, truth)?;
    let positives = truth.arc_count();
    let negatives = d * (d - 1) - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateTruth { positives, negatives });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    for u in 0..d {
        for v in 0..d {
            if u == v || !pred.arc(u, v) {
                continue;
            }
            if truth.arc(u, v) {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    Ok((tp as f64 / positives as f64, fp as f64 / negatives as f64))
}

/// ROC AUC of `|W|` scores against the true arcs, over ordered pairs with the
/// diagonal excluded. Computed with the rank-statistic formulation; tied
/// scores get midranks, which matches trapezoidal integration of the
/// threshold sweep.
pub fn roc_auc<F: Scalar>(
    w_learned: &WeightedAdjacency<F>,
    truth: &BinaryAdjacency,
) -> Result<f64> {
    let d = w_learned.node_count();
    if truth.node_count() != d {
        return Err(Error::DimensionMismatch(format!(
            "learned graph has {d} nodes, truth has {}",
            truth.node_count()
        )));
    }
    let mut scored: Vec<(f64, bool)> = Vec::with_capacity(d * (d - 1));
    for u in 0..d {
        for v in 0..d {
            if u != v {
                scored.push((w_learned.weight(u, v).abs().as_f64(), truth.arc(u, v)));
            }
        }
    }
    let positives = scored.iter().filter(|(_, label)| *label).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateTruth { positives, negatives });
    }

    scored.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
    // Midrank sum over the positive pairs.
    let mut rank_sum = 0.0f64;
    let mut i = 0usize;
    while i < scored.len() {
        let mut j = i;
        while j + 1 < scored.len() && scored[j + 1].0 == scored[i].0 {
            j += 1;
        }
        // Ranks are 1-based: ties spanning positions i..=j share the midrank.
        let midrank = (i + j + 2) as f64 / 2.0;
        for item in &scored[i..=j] {
            if item.1 {
                rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

fn check_same_size(pred: &BinaryAdjacency, truth: &BinaryAdjacency) -> Result<usize> {
    if pred.node_count() != truth.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "prediction has {} nodes, truth has {}",
            pred.node_count(),
            truth.node_count()
        )));
    }
    Ok(pred.node_count())
}

/// Full evaluation of a learned weight matrix against a ground-truth graph
/// at a fixed threshold. Serializes to one JSON object; see the README for
/// the schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub nhd: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub auc: f64,
    pub omega: f64,
    pub true_positive: usize,
    pub false_positive: usize,
    pub missing: usize,
    pub reversed: usize,
}

impl EvalReport {
    /// One CSV row matching [`EvalReport::CSV_HEADER`].
    pub const CSV_HEADER: [&'static str; 9] = [
        "nhd",
        "tpr",
        "fpr",
        "auc",
        "omega",
        "true_positive",
        "false_positive",
        "missing",
        "reversed",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.nhd.to_string(),
            self.tpr.to_string(),
            self.fpr.to_string(),
            self.auc.to_string(),
            self.omega.to_string(),
            self.true_positive.to_string(),
            self.false_positive.to_string(),
            self.missing.to_string(),
            self.reversed.to_string(),
        ]
    }
}

/// Thresholds the learned weights at `omega` and reports every metric.
pub fn evaluate<F: Scalar>(
    w_learned: &WeightedAdjacency<F>,
    truth: &BinaryAdjacency,
    omega: F,
) -> Result<EvalReport> {
    let pred = threshold(w_learned, omega);
    let errs = structural_errors(&pred, truth)?;
    let (tpr, fpr) = tpr_fpr(&pred, truth)?;
    let auc = roc_auc(w_learned, truth)?;
    let tp = truth.arcs().filter(|&(u, v)| pred.arc(u, v)).count();
    Ok(EvalReport {
        nhd: (errs.missing + errs.extra + errs.reversed) as f64 / truth.node_count() as f64,
        tpr,
        fpr,
        auc,
        omega: omega.as_f64(),
        true_positive: tp,
        false_positive: errs.extra,
        missing: errs.missing,
        reversed: errs.reversed,
    })
}
