use ndarray::{Array3, ArrayView1, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use super::forward::{forward, Mode};
use super::{lit, CnnParams, Scalar};
use crate::error::{Error, Result};

const EVAL_CHUNK: usize = 256;

/// Borrowed view of labelled windows, stored in 64-bit regardless of model precision.
#[derive(Debug, Clone, Copy)]
pub struct Examples<'a> {
    pub inputs: ArrayView3<'a, f64>,
    pub labels: &'a [usize],
}

impl<'a> Examples<'a> {
    pub fn new(inputs: ArrayView3<'a, f64>, labels: &'a [usize]) -> Result<Self> {
        if inputs.shape()[0] != labels.len() {
            return Err(Error::structural(format!(
                "{} windows but {} labels",
                inputs.shape()[0],
                labels.len()
            )));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Copy of the selected windows converted to the model precision.
    pub fn gather<F: Scalar>(&self, indices: &[usize]) -> Array3<F> {
        let (_, c, l) = self.inputs.dim();
        let mut out = Array3::<F>::zeros((indices.len(), c, l));
        for (mut dst, &i) in out.outer_iter_mut().zip(indices) {
            dst.zip_mut_with(&self.inputs.index_axis(Axis(0), i), |d, &s| *d = lit(s));
        }
        out
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<F: Scalar>(row: ArrayView1<'_, F>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub correct: usize,
    pub total: usize,
}

impl ClassCount {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

/// Eval-mode correct/total counts per class, over examples whose label is in `class_filter`.
pub fn evaluate_per_class<F: Scalar>(
    params: &CnnParams<F>,
    examples: Examples<'_>,
    class_filter: &[usize],
) -> Result<Vec<ClassCount>> {
    let k = params.arch.classes;
    if let Some(&bad) = class_filter.iter().find(|&&c| c >= k) {
        return Err(Error::structural(format!(
            "class {bad} out of range for {k} classes"
        )));
    }
    let selected: Vec<usize> = (0..examples.len())
        .filter(|&i| class_filter.contains(&examples.labels[i]))
        .collect();
    if selected.is_empty() {
        let mut classes = class_filter.to_vec();
        classes.sort_unstable();
        return Err(Error::EmptyEvaluation { classes });
    }
    let mut counts = vec![ClassCount::default(); k];
    for chunk in selected.chunks(EVAL_CHUNK) {
        let x = examples.gather::<F>(chunk);
        let logits = forward(params, x.view(), Mode::Eval)?;
        for (row, &i) in logits.rows().into_iter().zip(chunk) {
            let label = examples.labels[i];
            counts[label].total += 1;
            if argmax(row) == label {
                counts[label].correct += 1;
            }
        }
    }
    Ok(counts)
}

/// Fraction of filtered examples whose argmax logit equals the label.
pub fn evaluate_accuracy<F: Scalar>(
    params: &CnnParams<F>,
    examples: Examples<'_>,
    class_filter: &[usize],
) -> Result<f64> {
    let counts = evaluate_per_class(params, examples, class_filter)?;
    let (correct, total) = counts
        .iter()
        .fold((0, 0), |(c, t), n| (c + n.correct, t + n.total));
    Ok(correct as f64 / total as f64)
}
