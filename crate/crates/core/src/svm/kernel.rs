use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel families, listed from least to most exotic. The derived ordering is
/// the tie-break order used by grid search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
    Poly,
    Sigmoid,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Linear,
        KernelKind::Rbf,
        KernelKind::Poly,
        KernelKind::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Rbf => "rbf",
            KernelKind::Poly => "poly",
            KernelKind::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown kernel '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub gamma: f64,
    /// Polynomial degree, used by [`KernelKind::Poly`] only.
    pub degree: u32,
    /// Additive constant of the polynomial and sigmoid kernels.
    pub coef0: f64,
}

impl KernelConfig {
    pub fn new(kind: KernelKind, gamma: f64) -> KernelConfig {
        KernelConfig {
            kind,
            gamma,
            degree: 3,
            coef0: 0.0,
        }
    }

    pub fn linear() -> KernelConfig {
        KernelConfig::new(KernelKind::Linear, 1.0)
    }

    pub fn rbf(gamma: f64) -> KernelConfig {
        KernelConfig::new(KernelKind::Rbf, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.kind == KernelKind::Poly && self.degree < 1 {
            return Err(Error::Config("polynomial degree must be >= 1".into()));
        }
        if !self.coef0.is_finite() {
            return Err(Error::Config("coef0 must be finite".into()));
        }
        Ok(())
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::Shape {
                expected: u.len(),
                actual: v.len(),
            });
        }
        Ok(self.eval_unchecked(u, v))
    }

    /// Kernel value; callers guarantee equal lengths.
    pub(crate) fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(u, v),
            KernelKind::Rbf => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
            KernelKind::Poly => (self.gamma * dot(u, v) + self.coef0).powi(self.degree as i32),
            KernelKind::Sigmoid => (self.gamma * dot(u, v) + self.coef0).tanh(),
        }
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}
