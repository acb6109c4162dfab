use ndarray::Array2;
use rayon::prelude::*;

use crate::dataio::FeatureTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::gram::{cross_gram, gram_matrix};
use super::{GramCache, GramMatrix, HilbertScale, KernelFamily, KernelSpec};

pub const DEFAULT_RBF_GAMMAS: [f64; 4] = [10.0, 1.0, 0.1, 0.01];
pub const DEFAULT_CHI2_GAMMAS: [f64; 4] = [3.0, 2.0, 1.0, 0.5];

/// Every (view, family, γ) kernel over a training table, with its Gram
/// matrix and the normalization applied so far.
///
/// Kernels of one view are ordered linear, RBF (grid order), χ² (grid
/// order). The bank keeps a copy of the training features so prediction
/// Grams can be formed against them.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelBank<T> {
    pub(crate) specs: Vec<KernelSpec<T>>,
    pub(crate) grams: Vec<GramMatrix<T>>,
    /// Product of all divisors applied to each Gram.
    pub(crate) scales: Vec<T>,
    pub(crate) normalization: Vec<HilbertScale>,
    unavailable: Vec<KernelSpec<T>>,
    warnings: Vec<String>,
    train_views: Vec<Array2<T>>,
    table_hash: String,
}

/// Available specs, unavailable specs and warnings.
type SpecPlan<T> = (Vec<KernelSpec<T>>, Vec<KernelSpec<T>>, Vec<String>);

fn bank_specs<T: Scalar>(table: &FeatureTable<T>, rbf_grid: &[T], chi2_grid: &[T]) -> Result<SpecPlan<T>> {
    let mut specs = Vec::new();
    let mut unavailable = Vec::new();
    let mut warnings = Vec::new();
    for (f, view) in table.views().iter().enumerate() {
        specs.push(KernelSpec::linear(f));
        for &g in rbf_grid {
            specs.push(KernelSpec::rbf(f, g)?);
        }
        let chi2: Vec<KernelSpec<T>> = chi2_grid
            .iter()
            .map(|&g| KernelSpec::chi2(f, g))
            .collect::<Result<_>>()?;
        if view.iter().any(|&v| v < T::zero()) {
            if !chi2.is_empty() {
                warnings.push(format!(
                    "view `{}` has negative values; its {} chi2 kernels are unavailable",
                    table.view_names()[f],
                    chi2.len()
                ));
            }
            unavailable.extend(chi2);
        } else {
            specs.extend(chi2);
        }
    }
    Ok((specs, unavailable, warnings))
}

/// Builds the kernel bank over every sample of `table` (pass the training
/// split only).
pub fn build_bank<T: Scalar>(
    table: &FeatureTable<T>,
    rbf_grid: &[T],
    chi2_grid: &[T],
) -> Result<KernelBank<T>> {
    KernelBank::build(table, rbf_grid, chi2_grid, None)
}

impl<T: Scalar> KernelBank<T> {
    /// Like [`build_bank`], reading and filling an on-disk Gram cache.
    pub fn build(
        table: &FeatureTable<T>,
        rbf_grid: &[T],
        chi2_grid: &[T],
        cache: Option<&GramCache>,
    ) -> Result<Self> {
        let (specs, unavailable, warnings) = bank_specs(table, rbf_grid, chi2_grid)?;
        for w in &warnings {
            log::warn!("{w}");
        }
        Self::from_specs(table, specs, unavailable, warnings, cache)
    }

    /// A bank holding exactly the given kernels.
    pub fn with_specs(table: &FeatureTable<T>, specs: Vec<KernelSpec<T>>) -> Result<Self> {
        Self::from_specs(table, specs, Vec::new(), Vec::new(), None)
    }

    fn from_specs(
        table: &FeatureTable<T>,
        specs: Vec<KernelSpec<T>>,
        unavailable: Vec<KernelSpec<T>>,
        warnings: Vec<String>,
        cache: Option<&GramCache>,
    ) -> Result<Self> {
        if let Some(s) = specs.iter().find(|s| s.view >= table.n_views()) {
            return Err(Error::Invalid(format!("kernel {s} refers to a missing view")));
        }
        let table_hash = table.content_hash();
        let grams: Vec<GramMatrix<T>> = specs
            .par_iter()
            .map(|spec| {
                let compute = || gram_matrix(spec, table.view(spec.view));
                match cache {
                    Some(c) => c.get_or_compute(spec, &table_hash, compute),
                    None => compute(),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            scales: vec![T::one(); specs.len()],
            specs,
            grams,
            normalization: Vec::new(),
            unavailable,
            warnings,
            train_views: table.views().to_vec(),
            table_hash,
        })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn n_samples(&self) -> usize {
        self.train_views.first().map_or(0, |v| v.nrows())
    }

    pub fn n_views(&self) -> usize {
        self.train_views.len()
    }

    pub fn specs(&self) -> &[KernelSpec<T>] {
        &self.specs
    }

    pub fn spec(&self, m: usize) -> &KernelSpec<T> {
        &self.specs[m]
    }

    pub fn grams(&self) -> &[GramMatrix<T>] {
        &self.grams
    }

    pub fn gram(&self, m: usize) -> &GramMatrix<T> {
        &self.grams[m]
    }

    pub fn scales(&self) -> &[T] {
        &self.scales
    }

    pub fn normalization(&self) -> &[HilbertScale] {
        &self.normalization
    }

    pub fn unavailable(&self) -> &[KernelSpec<T>] {
        &self.unavailable
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn table_hash(&self) -> &str {
        &self.table_hash
    }

    pub fn train_views(&self) -> &[Array2<T>] {
        &self.train_views
    }

    /// Bank indices of the kernels on view `f`, in bank order.
    pub fn kernels_of_view(&self, f: usize) -> Vec<usize> {
        (0..self.len()).filter(|&m| self.specs[m].view == f).collect()
    }

    pub fn index_of(&self, spec: &KernelSpec<T>) -> Option<usize> {
        self.specs.iter().position(|s| s == spec)
    }

    /// Prediction Gram of kernel `m` (evaluation rows × training columns),
    /// divided by the stored training scale.
    pub fn cross_gram(&self, m: usize, eval_views: &[Array2<T>]) -> Result<GramMatrix<T>> {
        let spec = &self.specs[m];
        let eval = eval_views.get(spec.view).ok_or_else(|| {
            Error::Dimension(format!("evaluation data lacks view {} for {spec}", spec.view))
        })?;
        let raw = cross_gram(spec, eval, &self.train_views[spec.view])?;
        Ok(if self.scales[m] == T::one() {
            raw
        } else {
            raw.scaled(T::one() / self.scales[m])
        })
    }

    /// Number of kernels per view, i.e. the effective `M` of each view.
    pub fn kernels_per_view(&self) -> Vec<usize> {
        (0..self.n_views()).map(|f| self.kernels_of_view(f).len()).collect()
    }

    pub fn family_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for s in &self.specs {
            c[match s.family {
                KernelFamily::Linear => 0,
                KernelFamily::Rbf => 1,
                KernelFamily::Chi2 => 2,
            }] += 1;
        }
        c
    }
}
