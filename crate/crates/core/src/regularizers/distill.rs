//! Distillation targets and loss for the LwF term.
//!
//! Distributions here live in probability space: temperature scaling raises
//! each probability to `1/T` and renormalizes. The training objective uses
//! the equivalent logit form `softmax(z_old / T)` ([`kd_from_logits`]),
//! which avoids the probability floor and has a clean gradient.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{check_alpha, lit, log_softmax_row, softmax_row, Scalar};

/// Lower bound applied to probabilities before the `1/T` power and before logs.
pub const PROB_FLOOR: f64 = 1e-12;

const SUM_TOL: f64 = 1e-9;

/// A probability vector over an ordered subset of the classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    classes: Vec<usize>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(classes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if classes.is_empty() || classes.len() != probs.len() {
            return Err(Error::structural(format!(
                "distribution needs matching, non-empty classes and probabilities ({} vs {})",
                classes.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::structural(
                "probabilities must be finite and non-negative",
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::structural(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { classes, probs })
    }

    /// Softmax of `logits` restricted to `classes`, renormalized over that subset.
    pub fn from_logits(logits: &[f64], classes: &[usize]) -> Result<Self> {
        if let Some(&bad) = classes.iter().find(|&&c| c >= logits.len()) {
            return Err(Error::structural(format!(
                "class {bad} out of range for {} logits",
                logits.len()
            )));
        }
        let full = softmax_row(ndarray::ArrayView1::from(logits));
        let sub: Vec<f64> = classes.iter().map(|&c| full[c]).collect();
        let total: f64 = sub.iter().sum();
        Self::new(classes.to_vec(), sub.iter().map(|p| p / total).collect())
    }

    pub fn uniform(classes: Vec<usize>) -> Result<Self> {
        let n = classes.len() as f64;
        let probs = vec![1.0 / n; classes.len()];
        Self::new(classes, probs)
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn argmax(&self) -> usize {
        crate::nn::argmax(ndarray::ArrayView1::from(&self.probs[..]))
    }
}

/// Temperature scaling: `p_i^(1/T) / sum_j p_j^(1/T)`, with probabilities floored at [`PROB_FLOOR`].
pub fn temperature_scale(dist: &Distribution, temperature: f64) -> Result<Distribution> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::config(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let inv_t = 1.0 / temperature;
    let powered: Vec<f64> = dist
        .probs
        .iter()
        .map(|p| p.max(PROB_FLOOR).powf(inv_t))
        .collect();
    let total: f64 = powered.iter().sum();
    Distribution::new(
        dist.classes.clone(),
        powered.iter().map(|p| p / total).collect(),
    )
}

/// Cross-entropy of the student under the teacher's targets, `-sum y_i log yhat_i`.
pub fn kd_loss(teacher: &Distribution, student: &Distribution) -> Result<f64> {
    if teacher.classes != student.classes {
        return Err(Error::structural(format!(
            "teacher classes {:?} differ from student classes {:?}",
            teacher.classes, student.classes
        )));
    }
    Ok(-teacher
        .probs
        .iter()
        .zip(&student.probs)
        .map(|(y, s)| y * s.max(PROB_FLOOR).ln())
        .sum::<f64>())
}

/// `alpha * ce + (1 - alpha) * kd`.
pub fn lwf_total_loss(ce: f64, kd: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * ce + (1.0 - alpha) * kd)
}

/// Batch-mean distillation loss computed from raw logits, with its gradient
/// with respect to the student logits (zero outside `old_classes`).
///
/// Per example, targets are `softmax(teacher[old] / T)` and the student
/// distribution is `softmax(student[old] / T)`.
pub fn kd_from_logits<F: Scalar>(
    teacher_logits: ArrayView2<'_, F>,
    student_logits: ArrayView2<'_, F>,
    old_classes: &[usize],
    temperature: f64,
) -> Result<(F, Array2<F>)> {
    if teacher_logits.dim() != student_logits.dim() {
        return Err(Error::structural(format!(
            "teacher logits {:?} vs student logits {:?}",
            teacher_logits.dim(),
            student_logits.dim()
        )));
    }
    let (b, k) = student_logits.dim();
    if old_classes.is_empty() || old_classes.iter().any(|&c| c >= k) {
        return Err(Error::structural(format!(
            "invalid old-class set {old_classes:?} for {k} classes"
        )));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::config(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let t: F = lit(temperature);
    let bf = F::from_usize(b).unwrap();
    let mut grad = Array2::<F>::zeros((b, k));
    let mut total = F::zero();
    let gather = |row: ndarray::ArrayView1<'_, F>| -> ndarray::Array1<F> {
        old_classes.iter().map(|&c| row[c] / t).collect()
    };
    for ((tr, sr), mut g) in teacher_logits
        .rows()
        .into_iter()
        .zip(student_logits.rows())
        .zip(grad.rows_mut())
    {
        let y = softmax_row(gather(tr).view());
        let log_s = log_softmax_row(gather(sr).view());
        let mut sample = F::zero();
        for (j, &c) in old_classes.iter().enumerate() {
            sample += -y[j] * log_s[j];
            g[c] = (log_s[j].exp() - y[j]) / (t * bf);
        }
        total += sample;
    }
    Ok((total / bf, grad))
}
