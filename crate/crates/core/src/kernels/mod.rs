//! Kernel functions, Gram matrices, kernel banks and kernel normalization.

mod bank;
mod cache;
mod gram;
mod normalize;
mod spec;

pub use bank::{build_bank, KernelBank, DEFAULT_CHI2_GAMMAS, DEFAULT_RBF_GAMMAS};
pub use cache::{read_gram, write_gram, GramCache};
pub use gram::{cross_gram, gram_matrix, GramMatrix};
pub use normalize::{
    hilbert_variance, normalize_by_hilbert_std, zien_ong_normalize, zien_ong_weights, HilbertScale,
};
pub use spec::{eval_kernel, KernelFamily, KernelSpec};
