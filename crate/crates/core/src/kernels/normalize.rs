use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{GramMatrix, KernelBank};

/// Divisor applied by [`normalize_by_hilbert_std`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HilbertScale {
    /// Divide by `s²`, giving the embedded points unit variance.
    #[default]
    Variance,
    /// Divide by `s`.
    StdDev,
}

/// Variance of the kernel-embedded points:
/// `s² = (1/N) Σ_i K_ii − (1/N²) Σ_ij K_ij`.
pub fn hilbert_variance<T: Scalar>(gram: &GramMatrix<T>) -> Result<T> {
    if !gram.is_square() || gram.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "Hilbert-space variance needs a non-empty square Gram, got {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    // Centered two-pass form in f64: the second sum is zero in exact
    // arithmetic and cancels the rounding error of the mean.
    let n = gram.nrows() as f64;
    let values = gram.values();
    let mean = values.iter().map(|v| v.as_f64()).sum::<f64>() / (n * n);
    let diag: f64 = values.diag().iter().map(|v| v.as_f64() - mean).sum();
    let all: f64 = values.iter().map(|v| v.as_f64() - mean).sum();
    Ok(T::of(diag / n - all / (n * n)))
}

fn checked_variance<T: Scalar>(gram: &GramMatrix<T>, name: &dyn Fn() -> String) -> Result<T> {
    let s2 = hilbert_variance(gram)?;
    if !(s2.as_f64() >= 1e-12) {
        return Err(Error::DegenerateKernel {
            spec: name(),
            variance: s2.as_f64(),
        });
    }
    Ok(s2)
}

/// Rescales every training Gram of the bank by its Hilbert-space spread
/// (`s²` or `s`, see [`HilbertScale`]). The divisor is folded into the
/// bank's per-kernel scale so prediction rows get the same treatment.
pub fn normalize_by_hilbert_std<T: Scalar>(
    mut bank: KernelBank<T>,
    mode: HilbertScale,
) -> Result<KernelBank<T>> {
    let mut factors = Vec::with_capacity(bank.len());
    for (m, gram) in bank.grams.iter().enumerate() {
        let spec = bank.specs[m];
        let s2 = checked_variance(gram, &|| spec.to_string())?;
        factors.push(match mode {
            HilbertScale::Variance => s2,
            HilbertScale::StdDev => s2.sqrt(),
        });
    }
    for (m, factor) in factors.into_iter().enumerate() {
        bank.grams[m] = bank.grams[m].scaled(T::one() / factor);
        bank.scales[m] = bank.scales[m] * factor;
    }
    bank.normalization.push(mode);
    Ok(bank)
}

/// Multiplicative normalization `K / s²` used to make reported kernel
/// weights comparable across kernels.
pub fn zien_ong_normalize<T: Scalar>(gram: &GramMatrix<T>) -> Result<GramMatrix<T>> {
    let s2 = checked_variance(gram, &|| "gram".to_string())?;
    Ok(gram.scaled(T::one() / s2))
}

/// Weights re-expressed against Zien–Ong normalized kernels:
/// `β_m K_m = β'_m (K_m / s²_m)`, so `β'_m = β_m · s²_m`.
pub fn zien_ong_weights<T: Scalar>(betas: &[T], grams: &[&GramMatrix<T>]) -> Result<Vec<T>> {
    if betas.len() != grams.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} kernels",
            betas.len(),
            grams.len()
        )));
    }
    betas
        .iter()
        .zip(grams)
        .map(|(&b, g)| Ok(b * checked_variance(g, &|| "gram".to_string())?))
        .collect()
}
