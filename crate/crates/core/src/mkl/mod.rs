//! l_p-norm multiple kernel learning by alternating SVM solves and
//! closed-form weight updates.

mod model_io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, KernelSpec};
use crate::scalar::Scalar;
use crate::svm::{decision_values, train_binary_svm_warm, SvmModel, SvmParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MklParams<T> {
    pub c: T,
    pub p: T,
    pub tol_beta: T,
    pub max_outer: usize,
    pub svm_tol: T,
}

impl<T: Scalar> MklParams<T> {
    pub fn new(c: T, p: T) -> Self {
        Self {
            c,
            p,
            tol_beta: T::of(1e-4),
            max_outer: 100,
            svm_tol: T::of(1e-3),
        }
    }

    fn svm(&self) -> SvmParams<T> {
        SvmParams::new(self.c).with_tol(self.svm_tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MklStep<T> {
    pub betas: Vec<T>,
    pub objective: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MklModel<T> {
    pub specs: Vec<KernelSpec<T>>,
    pub betas: Vec<T>,
    pub p: T,
    pub svm: SvmModel<T>,
    /// `‖w_m‖² = β_m² αᵀYK_mYα` at the final solution.
    pub weight_norms: Vec<T>,
    pub trace: Vec<MklStep<T>>,
    pub converged: bool,
}

impl<T: Scalar> MklModel<T> {
    /// `Σ_m β_m^p`.
    pub fn constraint_value(&self) -> T {
        self.betas.iter().map(|&b| b.powf(self.p)).sum()
    }
}

/// Entrywise `Σ_m β_m K_m`.
pub fn combined_gram<T: Scalar>(betas: &[T], grams: &[&GramMatrix<T>]) -> Result<GramMatrix<T>> {
    if betas.len() != grams.len() || grams.is_empty() {
        return Err(Error::Dimension(format!(
            "{} weights for {} Gram matrices",
            betas.len(),
            grams.len()
        )));
    }
    let shape = grams[0].values().dim();
    if let Some(g) = grams.iter().find(|g| g.values().dim() != shape) {
        return Err(Error::Dimension(format!(
            "Gram shapes differ: {:?} vs {:?}",
            shape,
            g.values().dim()
        )));
    }
    let mut out = ndarray::Array2::<T>::zeros(shape);
    for (&b, g) in betas.iter().zip(grams) {
        if b != T::zero() {
            out.zip_mut_with(g.values(), |o, &k| *o = *o + b * k);
        }
    }
    GramMatrix::new(out)
}

/// One weight update for the l_p constraint `Σ β^p = 1`.
///
/// Given `‖w_m‖² = β_m² q_m` from the current SVM solution, minimizing
/// `Σ ‖w_m‖²/β_m` under the constraint gives
/// `β_m ∝ ‖w_m‖^{2/(p+1)}` with normalizer `(Σ ‖w_m‖^{2p/(p+1)})^{1/p}`.
/// At `p = 1` this is `β_m = ‖w_m‖ / Σ ‖w‖`; norms below 1e-12 are set to
/// zero so those kernels drop out. The result is renormalized exactly.
fn update_betas<T: Scalar>(norms_sq: &[T], p: T) -> Option<Vec<T>> {
    let floor = T::of(1e-12);
    let betas: Vec<T> = if p == T::one() {
        let w: Vec<T> = norms_sq
            .iter()
            .map(|&n| {
                let w = n.max(T::zero()).sqrt();
                if w < floor {
                    T::zero()
                } else {
                    w
                }
            })
            .collect();
        let total: T = w.iter().copied().sum();
        if total <= T::zero() {
            return None;
        }
        w.iter().map(|&x| x / total).collect()
    } else {
        let n: Vec<T> = norms_sq.iter().map(|&n| n.max(T::zero())).collect();
        let denom = n
            .iter()
            .map(|&x| x.powf(p / (p + T::one())))
            .sum::<T>()
            .powf(T::one() / p);
        if !(denom > T::zero()) {
            return None;
        }
        n.iter().map(|&x| x.powf(T::one() / (p + T::one())) / denom).collect()
    };
    Some(renormalize(betas, p))
}

fn renormalize<T: Scalar>(betas: Vec<T>, p: T) -> Vec<T> {
    let norm = betas.iter().map(|&b| b.powf(p)).sum::<T>().powf(T::one() / p);
    betas.into_iter().map(|b| b / norm).collect()
}

fn quadratic_forms<T: Scalar>(svm: &SvmModel<T>, grams: &[&GramMatrix<T>]) -> Vec<T> {
    grams.par_iter().map(|g| svm.quadratic_form(g)).collect()
}

/// Alternates warm-started SVM training on `Σ β_m K_m` with the closed-form
/// β update until `max |Δβ| < tol_beta` or `max_outer` steps, then retrains
/// the SVM on the final weights.
pub fn train_lp_mkl<T: Scalar>(
    specs: &[KernelSpec<T>],
    grams: &[&GramMatrix<T>],
    labels: &[i8],
    params: &MklParams<T>,
) -> Result<MklModel<T>> {
    let m = grams.len();
    if m == 0 {
        return Err(Error::Invalid("MKL needs at least one kernel".into()));
    }
    if specs.len() != m {
        return Err(Error::Dimension(format!("{} specs for {m} Gram matrices", specs.len())));
    }
    let p = params.p;
    if !(p >= T::one() && p.is_finite()) {
        return Err(Error::Invalid(format!("p must be >= 1, got {p}")));
    }
    let svm_params = params.svm();
    let mut betas = vec![(T::one() / T::of_usize(m)).powf(T::one() / p); m];
    let mut warm: Option<Vec<T>> = None;
    let mut trace = Vec::new();
    let mut converged = false;

    for _ in 0..params.max_outer {
        let k = combined_gram(&betas, grams)?;
        let svm = train_binary_svm_warm(&k, labels, &svm_params, warm.as_deref())?;
        let q = quadratic_forms(&svm, grams);
        let norms: Vec<T> = betas.iter().zip(&q).map(|(&b, &q)| b * b * q).collect();
        let next = update_betas(&norms, p).ok_or(Error::DegenerateMkl)?;
        let delta = betas
            .iter()
            .zip(&next)
            .fold(T::zero(), |d, (&a, &b)| d.max((a - b).abs()));
        trace.push(MklStep {
            betas: next.clone(),
            objective: svm.objective,
        });
        betas = next;
        warm = Some(svm.alphas);
        if delta < params.tol_beta {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("MKL weights did not converge in {} steps", params.max_outer);
    }

    let k = combined_gram(&betas, grams)?;
    let svm = train_binary_svm_warm(&k, labels, &svm_params, warm.as_deref())?;
    let q = quadratic_forms(&svm, grams);
    let weight_norms = betas.iter().zip(&q).map(|(&b, &q)| b * b * q).collect();
    Ok(MklModel {
        specs: specs.to_vec(),
        betas,
        p,
        svm,
        weight_norms,
        trace,
        converged,
    })
}

/// Decision values of the β-combined cross-Gram; one matrix per active spec.
pub fn predict_mkl<T: Scalar>(model: &MklModel<T>, cross_grams: &[&GramMatrix<T>]) -> Result<Vec<T>> {
    if cross_grams.len() != model.betas.len() {
        return Err(Error::Dimension(format!(
            "{} cross-Gram matrices for {} kernels",
            cross_grams.len(),
            model.betas.len()
        )));
    }
    let k = combined_gram(&model.betas, cross_grams)?;
    decision_values(&model.svm, &k)
}
