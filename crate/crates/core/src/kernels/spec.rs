use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Linear,
    Rbf,
    Chi2,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Linear => "linear",
            KernelFamily::Rbf => "rbf",
            KernelFamily::Chi2 => "chi2",
        })
    }
}

/// A kernel family applied to one feature view, with its bandwidth.
///
/// Written as `v<view>:linear`, `v<view>:rbf:<gamma>` or
/// `v<view>:chi2:<gamma>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<T> {
    pub view: usize,
    pub family: KernelFamily,
    pub gamma: Option<T>,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn linear(view: usize) -> Self {
        Self {
            view,
            family: KernelFamily::Linear,
            gamma: None,
        }
    }

    pub fn rbf(view: usize, gamma: T) -> Result<Self> {
        Self::with_gamma(view, KernelFamily::Rbf, gamma)
    }

    pub fn chi2(view: usize, gamma: T) -> Result<Self> {
        Self::with_gamma(view, KernelFamily::Chi2, gamma)
    }

    fn with_gamma(view: usize, family: KernelFamily, gamma: T) -> Result<Self> {
        if !(gamma > T::zero() && gamma.is_finite()) {
            return Err(Error::Invalid(format!("{family} gamma must be positive, got {gamma}")));
        }
        Ok(Self {
            view,
            family,
            gamma: Some(gamma),
        })
    }

    fn gamma(&self) -> T {
        self.gamma.unwrap_or_else(T::zero)
    }

    /// Kernel value without domain checks; callers validate dimensions and
    /// (for χ²) non-negativity up front.
    #[inline]
    pub(crate) fn value_unchecked(&self, x1: &[T], x2: &[T]) -> T {
        match self.family {
            KernelFamily::Linear => x1.iter().zip(x2).map(|(&a, &b)| a * b).sum(),
            KernelFamily::Rbf => {
                let d: T = x1.iter().zip(x2).map(|(&a, &b)| (a - b) * (a - b)).sum();
                (-self.gamma() * d).exp()
            }
            KernelFamily::Chi2 => {
                let d: T = x1
                    .iter()
                    .zip(x2)
                    .map(|(&a, &b)| {
                        let s = a + b;
                        if s > T::zero() {
                            (a - b) * (a - b) / s
                        } else {
                            T::zero()
                        }
                    })
                    .sum();
                (-self.gamma() * d).exp()
            }
        }
    }
}

impl<T: Scalar> fmt::Display for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gamma {
            None => write!(f, "v{}:{}", self.view, self.family),
            Some(g) => write!(f, "v{}:{}:{}", self.view, self.family, g),
        }
    }
}

impl<T: Scalar> FromStr for KernelSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("malformed kernel spec `{s}`"));
        let mut parts = s.split(':');
        let view = parts
            .next()
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse().ok())
            .ok_or_else(bad)?;
        let family = parts.next().ok_or_else(bad)?;
        let gamma = parts.next().map(|g| g.parse::<T>().map_err(|_| bad())).transpose()?;
        if parts.next().is_some() {
            return Err(bad());
        }
        match (family, gamma) {
            ("linear", None) => Ok(Self::linear(view)),
            ("rbf", Some(g)) => Self::rbf(view, g),
            ("chi2", Some(g)) => Self::chi2(view, g),
            _ => Err(bad()),
        }
    }
}

/// Evaluates one kernel on two vectors of the same view.
///
/// * linear: `x1·x2`
/// * rbf: `exp(-γ‖x1 − x2‖²)`
/// * chi2: `exp(-γ Σ_j (x1j − x2j)² / (x1j + x2j))`, where components with
///   `x1j + x2j = 0` contribute nothing.
pub fn eval_kernel<T: Scalar>(spec: &KernelSpec<T>, x1: &[T], x2: &[T]) -> Result<T> {
    if x1.len() != x2.len() {
        return Err(Error::Dimension(format!(
            "kernel {spec} applied to vectors of length {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    if spec.family == KernelFamily::Chi2 && x1.iter().chain(x2).any(|&v| v < T::zero()) {
        return Err(Error::Invalid(format!(
            "chi2 kernel {spec} requires non-negative components"
        )));
    }
    Ok(spec.value_unchecked(x1, x2))
}
