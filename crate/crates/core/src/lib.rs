//! Kernel methods for multi-view classification: SVM and l_p-norm MKL on
//! precomputed Gram matrices, greedy cross-validated kernel-subset
//! selection, LBP image descriptors and a repeated-split benchmark harness.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common instantiations.

// `!(x > 0)` guards are used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod error;
pub mod features;
pub mod harness;
pub mod heuristic;
pub mod kernels;
pub mod mkl;
pub mod rng;
pub mod scalar;
pub mod svm;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FeatureTable64 = dataio::FeatureTable<f64>;
pub type FeatureTable32 = dataio::FeatureTable<f32>;
pub type GramMatrix64 = kernels::GramMatrix<f64>;
pub type GramMatrix32 = kernels::GramMatrix<f32>;
pub type KernelBank64 = kernels::KernelBank<f64>;
pub type KernelBank32 = kernels::KernelBank<f32>;
pub type KernelSpec64 = kernels::KernelSpec<f64>;
pub type KernelSpec32 = kernels::KernelSpec<f32>;
pub type SvmModel64 = svm::SvmModel<f64>;
pub type SvmModel32 = svm::SvmModel<f32>;
pub type MklModel64 = mkl::MklModel<f64>;
pub type MklModel32 = mkl::MklModel<f32>;
pub type MulticlassModel64 = harness::MulticlassModel<f64>;
pub type MulticlassModel32 = harness::MulticlassModel<f32>;
pub type PipelineSettings64 = harness::PipelineSettings<f64>;
pub type BenchmarkPlan64 = harness::BenchmarkPlan<f64>;
