use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    #[serde(alias = "poly")]
    Polynomial,
    Rbf,
}

/// Kernel choice before training; an RBF width of `None` is derived from the
/// training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub degree: u32,
    pub gamma_rbf: Option<f64>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::linear()
    }
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            degree: 3,
            gamma_rbf: None,
        }
    }

    pub fn polynomial(degree: u32) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            degree,
            gamma_rbf: None,
        }
    }

    pub fn rbf(gamma: Option<f64>) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            degree: 3,
            gamma_rbf: gamma,
        }
    }

    /// Fixes every free parameter; the default RBF width is
    /// `1 / (k · var(features))` over all entries of the training matrix.
    pub fn resolve(&self, features: &[Vec<f64>]) -> Result<Kernel> {
        match self.kind {
            KernelKind::Linear => Ok(Kernel::Linear),
            KernelKind::Polynomial => {
                if self.degree == 0 {
                    return Err(Error::Precondition("polynomial degree must be >= 1".into()));
                }
                Ok(Kernel::Polynomial {
                    degree: self.degree,
                })
            }
            KernelKind::Rbf => {
                let gamma = match self.gamma_rbf {
                    Some(g) => g,
                    None => default_rbf_gamma(features),
                };
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::Precondition(format!(
                        "RBF width must be positive, got {gamma}"
                    )));
                }
                Ok(Kernel::Rbf { gamma })
            }
        }
    }
}

pub fn default_rbf_gamma(features: &[Vec<f64>]) -> f64 {
    let k = features.first().map_or(0, Vec::len);
    let count = (features.len() * k) as f64;
    if count == 0.0 {
        return 1.0;
    }
    let mean = features.iter().flatten().sum::<f64>() / count;
    let var = features.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (k as f64 * var)
    } else {
        1.0
    }
}

/// A fully specified kernel function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Polynomial { degree: u32 },
    Rbf { gamma: f64 },
}

impl Kernel {
    /// Evaluates without checking dimensions.
    #[inline]
    pub(crate) fn apply(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, z),
            Kernel::Polynomial { degree } => (dot(x, z) + 1.0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Polynomial { .. } => "polynomial",
            Kernel::Rbf { .. } => "rbf",
        }
    }
}

#[inline]
fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(kernel: &Kernel, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: z.len(),
        });
    }
    Ok(kernel.apply(x, z))
}
