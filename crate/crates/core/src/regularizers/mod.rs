//! Regularized objectives: distillation (LwF), the EWC quadratic penalty,
//! and their combination.

mod distill;
mod ewc;

use serde::{Deserialize, Serialize};

pub use distill::{
    kd_from_logits, kd_loss, lwf_total_loss, temperature_scale, Distribution, PROB_FLOOR,
};
pub(crate) use ewc::add_ewc_gradient;
pub use ewc::{
    estimate_diag_fisher, ewc_penalty, per_example_gradients, FisherAnchor, TeacherSnapshot,
};

use crate::error::{Error, Result};
use crate::nn::{check_alpha, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Plain,
    Lwf,
    Ewc,
    #[serde(rename = "ewclwf")]
    EwcLwf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ewc, Method::Lwf, Method::EwcLwf, Method::Plain];

    pub fn needs_teacher(self) -> bool {
        matches!(self, Method::Lwf | Method::EwcLwf)
    }

    pub fn needs_anchors(self) -> bool {
        matches!(self, Method::Ewc | Method::EwcLwf)
    }

    /// Column label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Plain => "Plain",
            Method::Lwf => "LwF",
            Method::Ewc => "EWC",
            Method::EwcLwf => "EWCLwF",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Plain => "plain",
            Method::Lwf => "lwf",
            Method::Ewc => "ewc",
            Method::EwcLwf => "ewclwf",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plain" | "baseline" | "plain-baseline" => Ok(Method::Plain),
            "lwf" => Ok(Method::Lwf),
            "ewc" => Ok(Method::Ewc),
            "ewclwf" | "ewc+lwf" | "ewc-lwf" => Ok(Method::EwcLwf),
            other => Err(Error::config(format!(
                "unknown method '{other}' (expected ewc, lwf, ewclwf or plain)"
            ))),
        }
    }
}

/// How the combined EWC + LwF objective is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    /// `alpha*CE + (1-alpha)*KD + penalty`: one classification term.
    #[default]
    Single,
    /// `CE + (alpha*CE + (1-alpha)*KD) + (CE + penalty)`: the sum of the three total losses.
    Literal,
}

impl std::str::FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(CombineMode::Single),
            "literal" => Ok(CombineMode::Literal),
            other => Err(Error::config(format!(
                "unknown combine mode '{other}' (expected single or literal)"
            ))),
        }
    }
}

impl std::fmt::Display for CombineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CombineMode::Single => "single",
            CombineMode::Literal => "literal",
        })
    }
}

/// Combined EWC + LwF objective from its components.
pub fn ewclwf_total_loss(
    ce: f64,
    kd: f64,
    penalty: f64,
    alpha: f64,
    mode: CombineMode,
) -> Result<f64> {
    let lwf = lwf_total_loss(ce, kd, alpha)?;
    Ok(match mode {
        CombineMode::Single => lwf + penalty,
        CombineMode::Literal => ce + lwf + (ce + penalty),
    })
}

/// Which objective to optimize, with borrowed regularizer state.
#[derive(Debug, Clone, Copy)]
pub struct LossSpec<'a, F: Scalar> {
    pub method: Method,
    pub teacher: Option<&'a TeacherSnapshot<F>>,
    pub anchors: &'a [FisherAnchor<F>],
    pub alpha: f64,
    pub combine: CombineMode,
}

impl<'a, F: Scalar> LossSpec<'a, F> {
    pub fn plain() -> Self {
        Self {
            method: Method::Plain,
            teacher: None,
            anchors: &[],
            alpha: 1.0,
            combine: CombineMode::Single,
        }
    }

    /// Spec for `method` given whatever state exists; falls back to plain
    /// cross-entropy (and logs it) while required state is still missing.
    pub fn resolve(
        method: Method,
        teacher: Option<&'a TeacherSnapshot<F>>,
        anchors: &'a [FisherAnchor<F>],
        alpha: f64,
        combine: CombineMode,
    ) -> Self {
        let missing_teacher = method.needs_teacher() && teacher.is_none();
        let missing_anchors = method.needs_anchors() && anchors.is_empty();
        if method != Method::Plain && (missing_teacher || missing_anchors) {
            log::debug!("{method}: no regularizer state yet, training with plain cross-entropy");
            return Self::plain();
        }
        Self {
            method,
            teacher,
            anchors,
            alpha,
            combine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.method.needs_teacher() && self.teacher.is_none() {
            return Err(Error::config(format!(
                "{} objective requires a teacher snapshot",
                self.method
            )));
        }
        if self.method.needs_anchors() && self.anchors.is_empty() {
            return Err(Error::config(format!(
                "{} objective requires at least one Fisher anchor",
                self.method
            )));
        }
        Ok(())
    }
}
