use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "32" => Ok(Precision::F32),
            "f64" | "64" => Ok(Precision::F64),
            other => Err(Error::config(format!(
                "unknown precision '{other}' (expected f32 or f64)"
            ))),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

/// Training and regularization hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub epochs_per_round: usize,
    /// Distillation temperature.
    pub temperature: f64,
    /// Weight of the classification term against distillation.
    pub alpha: f64,
    /// EWC importance.
    pub lambda: f64,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 32,
            dropout_rate: 0.5,
            epochs_per_round: 20,
            temperature: 3.0,
            alpha: 0.1,
            lambda: 5.0,
            seed: 0,
            precision: Precision::F64,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "{name} must be a positive real, got {v}"
                )))
            }
        };
        positive("learning_rate", self.learning_rate)?;
        positive("temperature", self.temperature)?;
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.epochs_per_round == 0 {
            return Err(Error::config("epochs_per_round must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        check_alpha(self.alpha)?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )))
    }
}
