use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{HilbertScale, DEFAULT_CHI2_GAMMAS, DEFAULT_RBF_GAMMAS};
use crate::mkl::MklParams;
use crate::scalar::Scalar;

/// Grids and solver settings shared by every method of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings<T> {
    pub rbf_gammas: Vec<T>,
    pub chi2_gammas: Vec<T>,
    pub c_grid: Vec<T>,
    pub cv_folds: usize,
    pub scale: HilbertScale,
    pub tol_beta: T,
    pub max_outer: usize,
    pub svm_tol: T,
}

impl<T: Scalar> Default for PipelineSettings<T> {
    fn default() -> Self {
        Self {
            rbf_gammas: DEFAULT_RBF_GAMMAS.iter().map(|&g| T::of(g)).collect(),
            chi2_gammas: DEFAULT_CHI2_GAMMAS.iter().map(|&g| T::of(g)).collect(),
            c_grid: [0.1, 1.0, 2.0, 3.0, 4.0, 5.0].iter().map(|&c| T::of(c)).collect(),
            cv_folds: 5,
            scale: HilbertScale::Variance,
            tol_beta: T::of(1e-4),
            max_outer: 100,
            svm_tol: T::of(1e-3),
        }
    }
}

impl<T: Scalar> PipelineSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() {
            return Err(Error::Invalid("C grid is empty".into()));
        }
        if let Some(c) = self.c_grid.iter().find(|&&c| !(c > T::zero() && c.is_finite())) {
            return Err(Error::Invalid(format!("C values must be positive, got {c}")));
        }
        for g in self.rbf_gammas.iter().chain(&self.chi2_gammas) {
            if !(*g > T::zero() && g.is_finite()) {
                return Err(Error::Invalid(format!("kernel gammas must be positive, got {g}")));
            }
        }
        if self.cv_folds < 2 {
            return Err(Error::Invalid(format!("need at least 2 CV folds, got {}", self.cv_folds)));
        }
        if self.max_outer == 0 {
            return Err(Error::Invalid("max_outer must be at least 1".into()));
        }
        Ok(())
    }

    pub fn mkl_params(&self, c: T, p: T) -> MklParams<T> {
        MklParams {
            c,
            p,
            tol_beta: self.tol_beta,
            max_outer: self.max_outer,
            svm_tol: self.svm_tol,
        }
    }

    /// C values in ascending order, so earlier entries win ties.
    pub(crate) fn sorted_c_grid(&self) -> Vec<T> {
        let mut g = self.c_grid.clone();
        g.sort_by(|a, b| a.partial_cmp(b).expect("finite C"));
        g.dedup();
        g
    }
}
