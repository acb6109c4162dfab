//! Binary soft-margin SVM trained in the dual on a precomputed Gram matrix.

mod model_io;
mod solver;

pub use solver::{decision_values, predict_labels, train_binary_svm, train_binary_svm_warm, SvmModel, SvmParams};
