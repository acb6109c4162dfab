use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{KernelFamily, KernelSpec};

/// Dense kernel matrix: square over one sample set, or rectangular
/// (`evaluation × training`) for prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix<T> {
    values: Array2<T>,
}

impl<T: Scalar> GramMatrix<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("Gram matrix has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            values: Array2::zeros((rows, cols)),
        }
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    /// Largest `|K_ij − K_ji|`; infinite for rectangular matrices.
    pub fn asymmetry(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let n = self.nrows();
        let mut worst = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.values[[i, j]] - self.values[[j, i]]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> T {
        self.values.diag().iter().copied().sum()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            values: self.values.mapv(|v| v * factor),
        }
    }

    /// Sub-matrix on the given row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Array2::zeros((rows.len(), cols.len()));
        for (oi, &i) in rows.iter().enumerate() {
            let src = self.values.row(i);
            for (oj, &j) in cols.iter().enumerate() {
                out[[oi, oj]] = src[j];
            }
        }
        Self { values: out }
    }
}

pub(crate) fn check_view<T: Scalar>(spec: &KernelSpec<T>, data: &Array2<T>) -> Result<()> {
    if spec.family == KernelFamily::Chi2 && data.iter().any(|&v| v < T::zero()) {
        return Err(Error::Invalid(format!(
            "chi2 kernel {spec} requires non-negative components"
        )));
    }
    Ok(())
}

/// Square Gram matrix of one kernel over the rows of `data`. The lower
/// triangle mirrors the upper one, so the result is exactly symmetric.
pub fn gram_matrix<T: Scalar>(spec: &KernelSpec<T>, data: &Array2<T>) -> Result<GramMatrix<T>> {
    check_view(spec, data)?;
    let data = data.as_standard_layout();
    let n = data.nrows();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = data.row(i);
            let xi = xi.as_slice().expect("standard layout");
            (i..n)
                .map(|j| spec.value_unchecked(xi, data.row(j).as_slice().expect("standard layout")))
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            values[[i, i + off]] = v;
            values[[i + off, i]] = v;
        }
    }
    GramMatrix::new(values)
}

/// Rectangular kernel matrix `K[e, t] = k(eval_e, train_t)`.
pub fn cross_gram<T: Scalar>(
    spec: &KernelSpec<T>,
    eval: &Array2<T>,
    train: &Array2<T>,
) -> Result<GramMatrix<T>> {
    if eval.ncols() != train.ncols() {
        return Err(Error::Dimension(format!(
            "kernel {spec}: evaluation features have dimension {}, training features {}",
            eval.ncols(),
            train.ncols()
        )));
    }
    check_view(spec, eval)?;
    check_view(spec, train)?;
    let eval = eval.as_standard_layout();
    let train = train.as_standard_layout();
    let rows: Vec<Vec<T>> = (0..eval.nrows())
        .into_par_iter()
        .map(|i| {
            let xi = eval.row(i);
            let xi = xi.as_slice().expect("standard layout");
            train
                .rows()
                .into_iter()
                .map(|xj| spec.value_unchecked(xi, xj.as_slice().expect("standard layout")))
                .collect()
        })
        .collect();
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    GramMatrix::new(
        Array2::from_shape_vec((eval.nrows(), train.nrows()), flat)
            .map_err(|e| Error::Dimension(e.to_string()))?,
    )
}
