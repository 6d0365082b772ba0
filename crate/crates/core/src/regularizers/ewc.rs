//! Frozen regularizer state and the EWC quadratic penalty.

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::nn::{backward, lit, softmax_ce_grad, CnnParams, Examples, Gradients, Mode, Scalar};

/// Frozen copy of a previous model, used as the distillation teacher.
#[derive(Debug, Clone)]
pub struct TeacherSnapshot<F: Scalar> {
    params: CnnParams<F>,
    old_classes: Vec<usize>,
    temperature: f64,
    checksum: u64,
}

impl<F: Scalar> TeacherSnapshot<F> {
    pub fn new(
        params: CnnParams<F>,
        mut old_classes: Vec<usize>,
        temperature: f64,
    ) -> Result<Self> {
        old_classes.sort_unstable();
        old_classes.dedup();
        if old_classes.is_empty() {
            return Err(Error::structural(
                "teacher snapshot needs at least one old class",
            ));
        }
        if let Some(&bad) = old_classes.iter().find(|&&c| c >= params.arch.classes) {
            return Err(Error::structural(format!("old class {bad} out of range")));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::config(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let checksum = params.checksum();
        Ok(Self {
            params,
            old_classes,
            temperature,
            checksum,
        })
    }

    pub fn params(&self) -> &CnnParams<F> {
        &self.params
    }

    pub fn old_classes(&self) -> &[usize] {
        &self.old_classes
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Checksum recorded when the snapshot was taken.
    pub fn checksum(&self) -> u64 {
        self.checksum
    }

    /// True when the frozen parameters still hash to the recorded checksum.
    pub fn verify(&self) -> bool {
        self.params.checksum() == self.checksum
    }
}

/// Anchor parameters and diagonal Fisher for one consolidated task.
#[derive(Debug, Clone)]
pub struct FisherAnchor<F: Scalar> {
    task: usize,
    anchor: CnnParams<F>,
    fisher: Gradients<F>,
    lambda: f64,
}

impl<F: Scalar> FisherAnchor<F> {
    pub fn new(
        task: usize,
        anchor: CnnParams<F>,
        fisher: Gradients<F>,
        lambda: f64,
    ) -> Result<Self> {
        anchor.check_congruent(&fisher)?;
        if fisher.iter().any(|v| !(*v >= F::zero()) || !v.is_finite()) {
            return Err(Error::structural(
                "Fisher entries must be finite and non-negative",
            ));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::config(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        Ok(Self {
            task,
            anchor,
            fisher,
            lambda,
        })
    }

    pub fn task(&self) -> usize {
        self.task
    }

    pub fn anchor(&self) -> &CnnParams<F> {
        &self.anchor
    }

    pub fn fisher(&self) -> &Gradients<F> {
        &self.fisher
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Empirical diagonal Fisher: the mean over samples of the squared gradient
/// of `-log p(label | x)`, one sample at a time in eval mode.
///
/// Uses the first `n_max` examples in the given order (all when `None`).
pub fn estimate_diag_fisher<F: Scalar>(
    params: &CnnParams<F>,
    samples: Examples<'_>,
    n_max: Option<usize>,
) -> Result<Gradients<F>> {
    let n = n_max.map_or(samples.len(), |m| m.min(samples.len()));
    if n == 0 {
        return Err(Error::structural(
            "Fisher estimation needs at least one sample",
        ));
    }
    let mut acc = params.zeros_like();
    for i in 0..n {
        let x = samples.gather::<F>(&[i]);
        let label = [samples.labels[i]];
        let (logits, cache) = crate::nn::forward_cached(params, x.view(), Mode::Eval)?;
        let (_, dlogits) = softmax_ce_grad(logits.view(), &label)?;
        let g = backward(params, &cache, dlogits.view())?;
        for (mut a, g) in acc.tensors_mut().into_iter().zip(g.tensors()) {
            Zip::from(&mut a).and(&g).for_each(|a, &g| *a += g * g);
        }
    }
    let inv_n: F = lit(1.0 / n as f64);
    Ok(acc.map(|v| v * inv_n))
}

/// `sum over anchors of (lambda/2) * sum_i F_i (theta_i - theta*_i)^2`.
pub fn ewc_penalty<F: Scalar>(params: &CnnParams<F>, anchors: &[FisherAnchor<F>]) -> Result<f64> {
    let mut total = 0.0;
    for a in anchors {
        params.check_congruent(&a.anchor)?;
        let mut sum = 0.0f64;
        for ((p, s), f) in params.iter().zip(a.anchor.iter()).zip(a.fisher.iter()) {
            let d = (*p - *s).to_f64().unwrap();
            sum += f.to_f64().unwrap() * d * d;
        }
        total += 0.5 * a.lambda * sum;
    }
    Ok(total)
}

/// Adds `lambda * F * (theta - theta*)` for every anchor with non-zero lambda.
pub(crate) fn add_ewc_gradient<F: Scalar>(
    grads: &mut Gradients<F>,
    params: &CnnParams<F>,
    anchors: &[FisherAnchor<F>],
) -> Result<()> {
    for a in anchors.iter().filter(|a| a.lambda != 0.0) {
        params.check_congruent(&a.anchor)?;
        let lambda: F = lit(a.lambda);
        for (((mut g, p), s), f) in grads
            .tensors_mut()
            .into_iter()
            .zip(params.tensors())
            .zip(a.anchor.tensors())
            .zip(a.fisher.tensors())
        {
            Zip::from(&mut g)
                .and(&p)
                .and(&s)
                .and(&f)
                .for_each(|g, &p, &s, &f| *g += lambda * f * (p - s));
        }
    }
    Ok(())
}

/// Batch-independent helper for tests and diagnostics: per-example gradients
/// of the plain classification loss, stacked as rows in tensor order.
pub fn per_example_gradients<F: Scalar>(
    params: &CnnParams<F>,
    samples: Examples<'_>,
) -> Result<Array2<F>> {
    let mut out = Array2::<F>::zeros((samples.len(), params.num_params()));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let x = samples.gather::<F>(&[i]);
        let (logits, cache) = crate::nn::forward_cached(params, x.view(), Mode::Eval)?;
        let (_, dlogits) = softmax_ce_grad(logits.view(), &[samples.labels[i]])?;
        let g = backward(params, &cache, dlogits.view())?;
        for (dst, src) in row.iter_mut().zip(g.iter()) {
            *dst = *src;
        }
    }
    Ok(out)
}
