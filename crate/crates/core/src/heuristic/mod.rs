//! Greedy kernel-subset selection scored by cross-validated one-vs-all MKL.

mod evaluator;
mod select;
mod trace;

pub use evaluator::{evaluate_kernel_set, CvEvaluator, FoldGrams};
pub use select::{select_kernels, select_kernels_on, Selection};
pub use trace::{ScoredSet, SelectionIteration, SelectionTrace, TerminationReason};
