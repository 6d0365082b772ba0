//! A small, deterministic 1-D CNN with hand-written backpropagation.
//!
//! The network is `conv -> ReLU -> max-pool -> flatten -> dense -> ReLU ->
//! dropout -> linear head`. All batch math goes through `ndarray` matrix
//! products, which run single-threaded with a fixed blocking order, so a
//! given (parameters, batch, seed) triple always yields the same bits.

mod eval;
mod forward;
mod hyper;
mod loss;
mod objective;
mod params;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};

pub use eval::{argmax, evaluate_accuracy, evaluate_per_class, ClassCount, Examples};
pub(crate) use forward::forward_cached;
pub use forward::{backward, forward, penultimate, Batch, ForwardCache, Mode};
pub(crate) use hyper::check_alpha;
pub use hyper::{Hyper, Precision};
pub use loss::{log_softmax_row, softmax_ce_grad, softmax_ce_loss, softmax_row};
pub use objective::{grad_total_loss, grad_total_loss_with_teacher};
pub use params::{Architecture, CnnParams, Gradients};

/// Floating point type the network can run in (`f64` by default, `f32` opt-in).
pub trait Scalar:
    Float
    + FromPrimitive
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Raw bit pattern widened to 64 bits, used for checksums.
    fn bits(self) -> u64;
}

impl Scalar for f64 {
    fn bits(self) -> u64 {
        self.to_bits()
    }
}

impl Scalar for f32 {
    fn bits(self) -> u64 {
        u64::from(self.to_bits())
    }
}

#[inline]
pub(crate) fn lit<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("f64 literal representable")
}
