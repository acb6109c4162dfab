//! Image descriptors built on uniform rotation-invariant local binary
//! patterns: LBP of dense moments and bag of dense LBP.

mod bag;
mod codebook;
mod image;
mod lbp;
mod moments;

pub use self::image::{load_rgb_image, Image};
pub use bag::{bag_of_dense_lbp, dense_lbp_descriptors, patch_origins};
pub use codebook::{build_codebook, read_codebook, write_codebook, Codebook};
pub use lbp::{lbp_histogram, LbpConfig};
pub use moments::{dense_moments, lbp_of_dense_moments};

use crate::scalar::Scalar;

/// Scales `v` to unit Euclidean norm; vectors with norm below `1e-12` are
/// returned unchanged.
pub fn l2_normalize<T: Scalar>(v: &[T]) -> Vec<T> {
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm < T::of(1e-12) {
        return v.to_vec();
    }
    v.iter().map(|&x| x / norm).collect()
}

/// Scales a non-negative histogram to sum 1 (unchanged if empty).
pub(crate) fn l1_normalize<T: Scalar>(counts: &[u64]) -> Vec<T> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![T::zero(); counts.len()];
    }
    let t = T::from_u64(total).expect("count fits scalar");
    counts
        .iter()
        .map(|&c| T::from_u64(c).expect("count fits scalar") / t)
        .collect()
}
