use ndarray::{Array2, ArrayView2};

use super::forward::{backward, forward, forward_cached, Batch, Mode};
use super::{lit, softmax_ce_grad, CnnParams, Gradients, Scalar};
use crate::error::{Error, Result};
use crate::regularizers::{
    add_ewc_gradient, ewc_penalty, ewclwf_total_loss, kd_from_logits, lwf_total_loss, CombineMode,
    LossSpec, Method,
};

/// Objective value and exact gradients for one batch.
///
/// The teacher (if the objective needs one) is run in eval mode on the same
/// inputs; the student's dropout mask is drawn once from `mode`.
pub fn grad_total_loss<F: Scalar>(
    spec: &LossSpec<'_, F>,
    params: &CnnParams<F>,
    batch: &Batch<F>,
    mode: Mode<'_>,
) -> Result<(f64, Gradients<F>)> {
    grad_total_loss_with_teacher(spec, params, batch, None, mode)
}

/// Like [`grad_total_loss`], but accepts teacher logits computed ahead of time.
pub fn grad_total_loss_with_teacher<F: Scalar>(
    spec: &LossSpec<'_, F>,
    params: &CnnParams<F>,
    batch: &Batch<F>,
    teacher_logits: Option<ArrayView2<'_, F>>,
    mode: Mode<'_>,
) -> Result<(f64, Gradients<F>)> {
    spec.validate()?;
    let (logits, cache) = forward_cached(params, batch.inputs.view(), mode)?;
    let (ce, dce) = softmax_ce_grad(logits.view(), &batch.labels)?;
    let ce64 = ce.to_f64().unwrap();

    let kd_part = if spec.method.needs_teacher() {
        let teacher = spec.teacher.expect("validated");
        let owned: Array2<F>;
        let tl = match teacher_logits {
            Some(t) => t,
            None => {
                owned = forward(teacher.params(), batch.inputs.view(), Mode::Eval)?;
                owned.view()
            }
        };
        Some(kd_from_logits(
            tl,
            logits.view(),
            teacher.old_classes(),
            teacher.temperature(),
        )?)
    } else {
        None
    };

    let (loss, dlogits) = match (spec.method, kd_part) {
        (Method::Plain, _) => (ce64, dce),
        (Method::Ewc, _) => (ce64 + ewc_penalty(params, spec.anchors)?, dce),
        (Method::Lwf, Some((kd, dkd))) => {
            let a: F = lit(spec.alpha);
            let loss = lwf_total_loss(ce64, kd.to_f64().unwrap(), spec.alpha)?;
            (loss, dce * a + dkd * (F::one() - a))
        }
        (Method::EwcLwf, Some((kd, dkd))) => {
            let pen = ewc_penalty(params, spec.anchors)?;
            let loss =
                ewclwf_total_loss(ce64, kd.to_f64().unwrap(), pen, spec.alpha, spec.combine)?;
            let ce_weight = match spec.combine {
                CombineMode::Single => spec.alpha,
                CombineMode::Literal => 2.0 + spec.alpha,
            };
            (
                loss,
                dce * lit::<F>(ce_weight) + dkd * (F::one() - lit::<F>(spec.alpha)),
            )
        }
        (m, None) => {
            return Err(Error::config(format!(
                "{m} objective evaluated without teacher"
            )))
        }
    };
    if !loss.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite {} objective",
            spec.method
        )));
    }

    let mut grads = backward(params, &cache, dlogits.view())?;
    if spec.method.needs_anchors() {
        add_ewc_gradient(&mut grads, params, spec.anchors)?;
    }
    Ok((loss, grads))
}
