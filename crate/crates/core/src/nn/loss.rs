use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::Scalar;
use crate::error::{Error, Result};

/// Numerically stable softmax of one logit row.
pub fn softmax_row<F: Scalar>(logits: ArrayView1<'_, F>) -> Array1<F> {
    let max = logits.fold(F::neg_infinity(), |m, &v| m.max(v));
    let mut out = logits.mapv(|v| (v - max).exp());
    let sum: F = out.iter().copied().sum();
    out.mapv_inplace(|v| v / sum);
    out
}

pub fn log_softmax_row<F: Scalar>(logits: ArrayView1<'_, F>) -> Array1<F> {
    let max = logits.fold(F::neg_infinity(), |m, &v| m.max(v));
    let lse = logits.iter().map(|&v| (v - max).exp()).sum::<F>().ln() + max;
    logits.mapv(|v| v - lse)
}

fn check_labels<F: Scalar>(logits: &ArrayView2<'_, F>, labels: &[usize]) -> Result<()> {
    let (b, k) = logits.dim();
    if b == 0 || b != labels.len() {
        return Err(Error::structural(format!(
            "{b} logit rows for {} labels",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::structural(format!(
            "label {bad} out of range for {k} classes"
        )));
    }
    Ok(())
}

/// Mean softmax cross-entropy over the batch.
pub fn softmax_ce_loss<F: Scalar>(logits: ArrayView2<'_, F>, labels: &[usize]) -> Result<F> {
    softmax_ce_grad(logits, labels).map(|(loss, _)| loss)
}

/// Mean cross-entropy and its gradient with respect to the logits,
/// `(softmax - onehot) / B`.
pub fn softmax_ce_grad<F: Scalar>(
    logits: ArrayView2<'_, F>,
    labels: &[usize],
) -> Result<(F, Array2<F>)> {
    check_labels(&logits, labels)?;
    let b = F::from_usize(labels.len()).unwrap();
    let mut grad = Array2::<F>::zeros(logits.raw_dim());
    let mut total = F::zero();
    for ((row, mut g), &label) in logits.rows().into_iter().zip(grad.rows_mut()).zip(labels) {
        let logp = log_softmax_row(row);
        total += -logp[label];
        for (gi, &lp) in g.iter_mut().zip(logp.iter()) {
            *gi = lp.exp() / b;
        }
        g[label] -= F::one() / b;
    }
    Ok((total / b, grad))
}
