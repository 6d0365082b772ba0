use ndarray::{Array1, Array2, Array3, ArrayViewD, ArrayViewMutD, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{lit, Scalar};
use crate::error::{Error, Result};

/// Layer sizes of the network. [`Architecture::har`] is the full-size model;
/// tests use tiny variants of the same pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub in_channels: usize,
    pub length: usize,
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Architecture {
    /// 196 filters of width 16 over 9 x 128 windows, pool 4, 1024 dense units, 6 classes.
    pub const fn har() -> Self {
        Self {
            in_channels: 9,
            length: 128,
            filters: 196,
            kernel: 16,
            pool: 4,
            hidden: 1024,
            classes: 6,
        }
    }

    pub fn with_channels(mut self, in_channels: usize) -> Self {
        self.in_channels = in_channels;
        self
    }

    /// Output length of the valid, stride-1 convolution.
    pub fn conv_len(&self) -> usize {
        self.length + 1 - self.kernel
    }

    /// Pooled length, with the trailing partial window dropped.
    pub fn pooled_len(&self) -> usize {
        self.conv_len() / self.pool
    }

    pub fn flat_len(&self) -> usize {
        self.filters * self.pooled_len()
    }

    pub fn patch_len(&self) -> usize {
        self.kernel * self.in_channels
    }

    pub fn num_params(&self) -> usize {
        self.filters * self.patch_len()
            + self.filters
            + self.hidden * self.flat_len()
            + self.hidden
            + self.classes * self.hidden
            + self.classes
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.in_channels,
            self.length,
            self.filters,
            self.kernel,
            self.pool,
            self.hidden,
            self.classes,
        ];
        if dims.contains(&0) {
            return Err(Error::structural(format!(
                "architecture has a zero dimension: {self:?}"
            )));
        }
        if self.kernel > self.length {
            return Err(Error::structural(format!(
                "kernel {} longer than input length {}",
                self.kernel, self.length
            )));
        }
        if self.pooled_len() == 0 {
            return Err(Error::structural(format!(
                "pool window {} longer than conv output {}",
                self.pool,
                self.conv_len()
            )));
        }
        Ok(())
    }
}

impl Default for Architecture {
    fn default() -> Self {
        Self::har()
    }
}

/// Every trainable tensor of the network.
///
/// Conv weights are laid out `[filters, kernel, channels]` so that a filter
/// flattens to one row of the im2col product; dense weights are
/// `[hidden, flat]` with the flat index `position * filters + filter`.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams<F: Scalar> {
    pub arch: Architecture,
    pub conv_weights: Array3<F>,
    pub conv_bias: Array1<F>,
    pub dense_weights: Array2<F>,
    pub dense_bias: Array1<F>,
    pub head_weights: Array2<F>,
    pub head_bias: Array1<F>,
}

/// Gradients (and diagonal Fisher estimates) share the parameter layout.
pub type Gradients<F> = CnnParams<F>;

impl<F: Scalar> CnnParams<F> {
    pub fn zeros(arch: Architecture) -> Self {
        Self {
            arch,
            conv_weights: Array3::zeros((arch.filters, arch.kernel, arch.in_channels)),
            conv_bias: Array1::zeros(arch.filters),
            dense_weights: Array2::zeros((arch.hidden, arch.flat_len())),
            dense_bias: Array1::zeros(arch.hidden),
            head_weights: Array2::zeros((arch.classes, arch.hidden)),
            head_bias: Array1::zeros(arch.classes),
        }
    }

    /// He-style uniform init: weights in `±sqrt(6 / fan_in)`, biases zero.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let mut p = Self::zeros(arch);
        fill_uniform(p.conv_weights.iter_mut(), arch.patch_len(), rng);
        fill_uniform(p.dense_weights.iter_mut(), arch.flat_len(), rng);
        fill_uniform(p.head_weights.iter_mut(), arch.hidden, rng);
        Ok(p)
    }

    /// Same-shaped zero tensor set.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.arch)
    }

    pub fn num_params(&self) -> usize {
        self.arch.num_params()
    }

    /// Tensors in the fixed order conv_w, conv_b, dense_w, dense_b, head_w, head_b.
    pub fn tensors(&self) -> [ArrayViewD<'_, F>; 6] {
        [
            self.conv_weights.view().into_dyn(),
            self.conv_bias.view().into_dyn(),
            self.dense_weights.view().into_dyn(),
            self.dense_bias.view().into_dyn(),
            self.head_weights.view().into_dyn(),
            self.head_bias.view().into_dyn(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [ArrayViewMutD<'_, F>; 6] {
        [
            self.conv_weights.view_mut().into_dyn(),
            self.conv_bias.view_mut().into_dyn(),
            self.dense_weights.view_mut().into_dyn(),
            self.dense_bias.view_mut().into_dyn(),
            self.head_weights.view_mut().into_dyn(),
            self.head_bias.view_mut().into_dyn(),
        ]
    }

    /// Fails unless every tensor of `other` has the same shape as ours.
    pub fn check_congruent(&self, other: &Self) -> Result<()> {
        for (i, (a, b)) in self
            .tensors()
            .iter()
            .zip(other.tensors().iter())
            .enumerate()
        {
            if a.shape() != b.shape() {
                return Err(Error::structural(format!(
                    "parameter tensor {i} shape mismatch: {:?} vs {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(())
    }

    /// Plain SGD, `theta <- theta - lr * g`.
    pub fn sgd_step(&mut self, grads: &Gradients<F>, lr: F) -> Result<()> {
        self.check_congruent(grads)?;
        for (mut p, g) in self.tensors_mut().into_iter().zip(grads.tensors()) {
            Zip::from(&mut p).and(&g).for_each(|p, &g| *p -= lr * g);
        }
        Ok(())
    }

    /// `self += scale * other`, element-wise.
    pub fn add_scaled(&mut self, other: &Self, scale: F) -> Result<()> {
        self.check_congruent(other)?;
        for (mut p, o) in self.tensors_mut().into_iter().zip(other.tensors()) {
            Zip::from(&mut p).and(&o).for_each(|p, &o| *p += scale * o);
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self {
            arch: self.arch,
            conv_weights: self.conv_weights.mapv(&f),
            conv_bias: self.conv_bias.mapv(&f),
            dense_weights: self.dense_weights.mapv(&f),
            dense_bias: self.dense_bias.mapv(&f),
            head_weights: self.head_weights.mapv(&f),
            head_bias: self.head_bias.mapv(&f),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &F> + '_ {
        self.conv_weights
            .iter()
            .chain(self.conv_bias.iter())
            .chain(self.dense_weights.iter())
            .chain(self.dense_bias.iter())
            .chain(self.head_weights.iter())
            .chain(self.head_bias.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut F> + '_ {
        self.conv_weights
            .iter_mut()
            .chain(self.conv_bias.iter_mut())
            .chain(self.dense_weights.iter_mut())
            .chain(self.dense_bias.iter_mut())
            .chain(self.head_weights.iter_mut())
            .chain(self.head_bias.iter_mut())
    }

    /// All values in tensor order.
    pub fn to_flat(&self) -> Vec<F> {
        self.iter().copied().collect()
    }

    pub fn set_flat(&mut self, values: &[F]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::structural(format!(
                "expected {} parameter values, got {}",
                self.num_params(),
                values.len()
            )));
        }
        for (p, &v) in self.iter_mut().zip(values) {
            *p = v;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// FNV-1a over the raw bits of every value, in tensor order.
    pub fn checksum(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        self.iter().fold(OFFSET, |mut h, v| {
            for byte in v.bits().to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(PRIME);
            }
            h
        })
    }
}

fn fill_uniform<'a, F: Scalar, R: Rng + ?Sized>(
    values: impl Iterator<Item = &'a mut F>,
    fan_in: usize,
    rng: &mut R,
) {
    let bound = (6.0 / fan_in as f64).sqrt();
    for v in values {
        *v = lit(rng.gen_range(-bound..bound));
    }
}
