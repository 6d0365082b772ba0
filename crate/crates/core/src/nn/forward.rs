use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::{Rng, RngCore};

use super::{lit, CnnParams, Gradients, Scalar};
use crate::error::{Error, Result};

/// A mini-batch of windows `[B, channels, length]` and their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<F: Scalar> {
    pub inputs: Array3<F>,
    pub labels: Vec<usize>,
}

impl<F: Scalar> Batch<F> {
    pub fn new(inputs: Array3<F>, labels: Vec<usize>) -> Result<Self> {
        if inputs.shape()[0] == 0 {
            return Err(Error::structural("batch must hold at least one example"));
        }
        if inputs.shape()[0] != labels.len() {
            return Err(Error::structural(format!(
                "batch has {} windows but {} labels",
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
}

/// Forward mode. Training draws an inverted-dropout mask from the supplied stream.
pub enum Mode<'r> {
    Eval,
    Train {
        dropout: f64,
        rng: &'r mut dyn RngCore,
    },
}

impl Mode<'_> {
    pub fn eval() -> Mode<'static> {
        Mode::Eval
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<F: Scalar> {
    batch: usize,
    /// im2col matrix `[B * conv_len, kernel * channels]`.
    patches: Array2<F>,
    /// Post-ReLU conv output `[B * conv_len, filters]`.
    conv_act: Array2<F>,
    /// Winning offset inside each pool window, indexed `[b][pos][filter]`.
    pool_arg: Vec<u32>,
    flat: Array2<F>,
    hidden_pre: Array2<F>,
    /// Inverted-dropout multipliers, absent in eval mode or at rate 0.
    mask: Option<Array2<F>>,
    /// Head input (post-ReLU, post-dropout).
    hidden_out: Array2<F>,
}

impl<F: Scalar> ForwardCache<F> {
    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Dense-layer activations after ReLU, before dropout.
    pub fn hidden(&self) -> Array2<F> {
        self.hidden_pre.mapv(relu)
    }
}

#[inline]
fn relu<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x
    } else {
        F::zero()
    }
}

fn check_inputs<F: Scalar>(params: &CnnParams<F>, inputs: &ArrayView3<'_, F>) -> Result<()> {
    let a = params.arch;
    let shape = inputs.shape();
    if shape[0] == 0 || shape[1] != a.in_channels || shape[2] != a.length {
        return Err(Error::structural(format!(
            "input shape {:?} does not match [B >= 1, {}, {}]",
            shape, a.in_channels, a.length
        )));
    }
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in network input".into()));
    }
    Ok(())
}

/// Logits `[B, classes]` for a batch of windows.
pub fn forward<F: Scalar>(
    params: &CnnParams<F>,
    inputs: ArrayView3<'_, F>,
    mode: Mode<'_>,
) -> Result<Array2<F>> {
    forward_cached(params, inputs, mode).map(|(logits, _)| logits)
}

/// Dense-layer activations (post-ReLU) in eval mode: the embedding fed to the head.
pub fn penultimate<F: Scalar>(
    params: &CnnParams<F>,
    inputs: ArrayView3<'_, F>,
) -> Result<Array2<F>> {
    let (_, cache) = forward_cached(params, inputs, Mode::Eval)?;
    Ok(cache.hidden_out)
}

pub(crate) fn forward_cached<F: Scalar>(
    params: &CnnParams<F>,
    inputs: ArrayView3<'_, F>,
    mode: Mode<'_>,
) -> Result<(Array2<F>, ForwardCache<F>)> {
    check_inputs(params, &inputs)?;
    let a = params.arch;
    let b = inputs.shape()[0];
    let (c, lc, k) = (a.in_channels, a.conv_len(), a.kernel);
    let nf = a.filters;
    let lp = a.pooled_len();

    let x = inputs.as_standard_layout();
    let xs = x.as_slice().expect("standard layout");
    let mut patches = Array2::<F>::zeros((b * lc, k * c));
    {
        let ps = patches.as_slice_mut().expect("fresh array");
        let row_len = k * c;
        for bi in 0..b {
            let xb = &xs[bi * c * a.length..(bi + 1) * c * a.length];
            for p in 0..lc {
                let row = &mut ps[(bi * lc + p) * row_len..(bi * lc + p + 1) * row_len];
                for ki in 0..k {
                    for ci in 0..c {
                        row[ki * c + ci] = xb[ci * a.length + p + ki];
                    }
                }
            }
        }
    }

    let w2 = params
        .conv_weights
        .view()
        .into_shape_with_order((nf, k * c))
        .map_err(|e| Error::structural(format!("conv weights: {e}")))?;
    let mut conv_act = patches.dot(&w2.t());
    conv_act += &params.conv_bias;
    conv_act.mapv_inplace(relu);

    let mut flat = Array2::<F>::zeros((b, lp * nf));
    let mut pool_arg = vec![0u32; b * lp * nf];
    {
        let cs = conv_act.as_slice().expect("fresh array");
        let fs = flat.as_slice_mut().expect("fresh array");
        for bi in 0..b {
            for pp in 0..lp {
                for f in 0..nf {
                    let base = bi * lc + pp * a.pool;
                    let mut best = cs[base * nf + f];
                    let mut arg = 0u32;
                    for j in 1..a.pool {
                        let v = cs[(base + j) * nf + f];
                        if v > best {
                            best = v;
                            arg = j as u32;
                        }
                    }
                    let o = (bi * lp + pp) * nf + f;
                    fs[o] = best;
                    pool_arg[o] = arg;
                }
            }
        }
    }

    let mut hidden_pre = flat.dot(&params.dense_weights.t());
    hidden_pre += &params.dense_bias;
    let mut hidden_out = hidden_pre.mapv(relu);

    let mask = match mode {
        Mode::Train { dropout, rng } if dropout > 0.0 => {
            let keep = 1.0 - dropout;
            let scale: F = lit(1.0 / keep);
            let mask = Array2::from_shape_simple_fn(hidden_out.raw_dim(), || {
                if rng.gen::<f64>() < keep {
                    scale
                } else {
                    F::zero()
                }
            });
            hidden_out *= &mask;
            Some(mask)
        }
        _ => None,
    };

    let mut logits = hidden_out.dot(&params.head_weights.t());
    logits += &params.head_bias;
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logits".into()));
    }

    Ok((
        logits,
        ForwardCache {
            batch: b,
            patches,
            conv_act,
            pool_arg,
            flat,
            hidden_pre,
            mask,
            hidden_out,
        },
    ))
}

/// Parameter gradients given the loss gradient with respect to the logits.
pub fn backward<F: Scalar>(
    params: &CnnParams<F>,
    cache: &ForwardCache<F>,
    dlogits: ArrayView2<'_, F>,
) -> Result<Gradients<F>> {
    let a = params.arch;
    let b = cache.batch;
    if dlogits.shape() != [b, a.classes] {
        return Err(Error::structural(format!(
            "logit gradient shape {:?} does not match [{b}, {}]",
            dlogits.shape(),
            a.classes
        )));
    }
    let (nf, lc, lp) = (a.filters, a.conv_len(), a.pooled_len());

    let head_weights = dlogits.t().dot(&cache.hidden_out);
    let head_bias = dlogits.sum_axis(Axis(0));

    let mut dhidden = dlogits.dot(&params.head_weights);
    if let Some(mask) = &cache.mask {
        dhidden *= mask;
    }
    ndarray::Zip::from(&mut dhidden)
        .and(&cache.hidden_pre)
        .for_each(|d, &pre| {
            if pre <= F::zero() {
                *d = F::zero();
            }
        });

    let dense_weights = dhidden.t().dot(&cache.flat);
    let dense_bias = dhidden.sum_axis(Axis(0));
    let dflat = dhidden.dot(&params.dense_weights);

    let mut dconv = Array2::<F>::zeros((b * lc, nf));
    {
        let ds = dconv.as_slice_mut().expect("fresh array");
        let cs = cache.conv_act.as_slice().expect("standard layout");
        let dfs = dflat.as_slice().expect("standard layout");
        for bi in 0..b {
            for pp in 0..lp {
                for f in 0..nf {
                    let o = (bi * lp + pp) * nf + f;
                    let row = bi * lc + pp * a.pool + cache.pool_arg[o] as usize;
                    if cs[row * nf + f] > F::zero() {
                        ds[row * nf + f] += dfs[o];
                    }
                }
            }
        }
    }

    let conv_bias = dconv.sum_axis(Axis(0));
    let conv_weights = dconv
        .t()
        .dot(&cache.patches)
        .into_shape_with_order((nf, a.kernel, a.in_channels))
        .map_err(|e| Error::structural(format!("conv gradient: {e}")))?;

    Ok(Gradients {
        arch: a,
        conv_weights,
        conv_bias,
        dense_weights,
        dense_bias,
        head_weights,
        head_bias,
    })
}
