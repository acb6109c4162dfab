//! Seeded multi-view toy data with informative and pure-noise views.
//!
//! A view with separation `s > 0` draws `|s·μ_c + σ·z|`, where `μ_c` is a
//! per-class prototype with uniform coordinates and `z` is standard normal.
//! Separation 0 yields `|σ·z|` with no class information. All values are
//! non-negative so every kernel family applies.

use ndarray::Array2;

use crate::dataio::FeatureTable;
use crate::error::{Error, Result};
use crate::rng::{stream, SeededRng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub samples_per_class: usize,
    pub dim: usize,
    /// One entry per view; 0 marks a noise view.
    pub separations: Vec<f64>,
    pub noise: f64,
}

impl SyntheticSpec {
    /// `informative` views with separation `sep` followed by `noise_views`
    /// noise views.
    pub fn mixed(n_classes: usize, samples_per_class: usize, informative: usize, noise_views: usize, sep: f64) -> Self {
        let mut separations = vec![sep; informative];
        separations.extend(std::iter::repeat_n(0.0, noise_views));
        Self {
            n_classes,
            samples_per_class,
            dim: 8,
            separations,
            noise: 1.0,
        }
    }
}

/// Samples are ordered class by class; ids are `s0000`, `s0001`, …
pub fn generate<T: Scalar>(spec: &SyntheticSpec, seed: u64) -> Result<FeatureTable<T>> {
    if spec.n_classes < 1 || spec.samples_per_class < 1 || spec.dim < 1 || spec.separations.is_empty() {
        return Err(Error::Invalid("synthetic spec needs classes, samples, dims and views".into()));
    }
    let mut rng = SeededRng::new(seed, stream::SYNTHETIC);
    let n = spec.n_classes * spec.samples_per_class;
    let labels: Vec<usize> = (0..n).map(|i| i / spec.samples_per_class).collect();
    let mut views = Vec::with_capacity(spec.separations.len());
    for &sep in &spec.separations {
        let protos: Vec<Vec<f64>> = (0..spec.n_classes)
            .map(|_| (0..spec.dim).map(|_| rng.unit()).collect())
            .collect();
        let mut v = Array2::<T>::zeros((n, spec.dim));
        for i in 0..n {
            for j in 0..spec.dim {
                v[[i, j]] = T::of((sep * protos[labels[i]][j] + spec.noise * rng.normal()).abs());
            }
        }
        views.push(v);
    }
    let view_names = (0..views.len())
        .map(|f| {
            if spec.separations[f] > 0.0 {
                format!("informative{f}")
            } else {
                format!("noise{f}")
            }
        })
        .collect();
    FeatureTable::new(
        (0..n).map(|i| format!("s{i:04}")).collect(),
        labels,
        (0..spec.n_classes).map(|c| format!("c{c}")).collect(),
        views,
        view_names,
    )
}
