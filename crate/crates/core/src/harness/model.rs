use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::FeatureTable;
use crate::error::{Error, Result};
use crate::heuristic::SelectionTrace;
use crate::kernels::{cross_gram, GramMatrix, KernelSpec};
use crate::mkl::{predict_mkl, train_lp_mkl, MklModel, MklParams};
use crate::scalar::Scalar;

use super::Method;

/// K one-vs-all models sharing one kernel set.
///
/// Single-kernel baselines are stored as one-kernel MKL models, whose
/// embedded SVM is the plain SVM on that kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel<T> {
    pub method: Method,
    pub class_names: Vec<String>,
    pub specs: Vec<KernelSpec<T>>,
    /// Training-time divisor of each active kernel.
    pub scales: Vec<T>,
    /// Features the kernels are evaluated against (after concatenation for
    /// the concatenated baseline).
    pub train_views: Vec<Array2<T>>,
    /// Whether inputs are concatenated into a single view before use.
    pub concat: bool,
    pub c: T,
    pub p: T,
    pub models: Vec<MklModel<T>>,
    pub selection: Option<SelectionTrace>,
}

/// Trains one binary MKL problem per class (class `k` against the rest) on
/// the given training Grams.
pub fn train_one_vs_all<T: Scalar>(
    specs: &[KernelSpec<T>],
    grams: &[&GramMatrix<T>],
    labels: &[usize],
    n_classes: usize,
    params: &MklParams<T>,
) -> Result<Vec<MklModel<T>>> {
    if n_classes < 2 {
        return Err(Error::Invalid("one-vs-all needs at least two classes".into()));
    }
    if let Some(k) = (0..n_classes).find(|k| !labels.contains(k)) {
        return Err(Error::Invalid(format!("class {k} is absent from the training data")));
    }
    (0..n_classes)
        .into_par_iter()
        .map(|k| {
            let y: Vec<i8> = labels.iter().map(|&l| if l == k { 1 } else { -1 }).collect();
            train_lp_mkl(specs, grams, &y, params)
        })
        .collect()
}

impl<T: Scalar> MulticlassModel<T> {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Cross-Grams (evaluation rows × training columns) of the active kernels.
    pub fn cross_grams(&self, table: &FeatureTable<T>) -> Result<Vec<GramMatrix<T>>> {
        let input = if self.concat { table.concatenated() } else { table.clone() };
        self.specs
            .par_iter()
            .zip(&self.scales)
            .map(|(spec, &scale)| {
                let eval = input.views().get(spec.view).ok_or_else(|| {
                    Error::Dimension(format!("input lacks view {} used by {spec}", spec.view))
                })?;
                let train = &self.train_views[spec.view];
                if eval.ncols() != train.ncols() {
                    return Err(Error::Dimension(format!(
                        "view {} has {} features, model expects {}",
                        spec.view,
                        eval.ncols(),
                        train.ncols()
                    )));
                }
                let raw = cross_gram(spec, eval, train)?;
                Ok(if scale == T::one() { raw } else { raw.scaled(T::one() / scale) })
            })
            .collect()
    }

    /// Decision values, one row per sample and one column per class.
    pub fn decision_scores(&self, table: &FeatureTable<T>) -> Result<Array2<T>> {
        let grams = self.cross_grams(table)?;
        let refs: Vec<&GramMatrix<T>> = grams.iter().collect();
        let cols = self
            .models
            .iter()
            .map(|m| predict_mkl(m, &refs))
            .collect::<Result<Vec<_>>>()?;
        Ok(Array2::from_shape_fn((table.n_samples(), cols.len()), |(i, k)| cols[k][i]))
    }
}

/// Argmax over the per-class decision values; ties go to the lower class.
pub fn predict_multiclass<T: Scalar>(model: &MulticlassModel<T>, table: &FeatureTable<T>) -> Result<Vec<usize>> {
    let scores = model.decision_scores(table)?;
    Ok(scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect())
}
