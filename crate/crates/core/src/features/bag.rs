use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{l1_normalize, lbp_histogram, Codebook, Image, LbpConfig};

/// Top-left corners `(y, x)` of every `w × w` patch on a grid with stride
/// `step` that fits inside a `height × width` image.
pub fn patch_origins(height: usize, width: usize, w: usize, step: usize) -> Vec<(usize, usize)> {
    if w == 0 || step == 0 || w > height || w > width {
        return Vec::new();
    }
    let ys = (0..=height - w).step_by(step);
    ys.flat_map(|y| (0..=width - w).step_by(step).map(move |x| (y, x)))
        .collect()
}

/// One row per grid patch: the three per-channel LBP histograms of the
/// patch, each scaled to sum 1, concatenated in R, G, B order.
pub fn dense_lbp_descriptors<T: Scalar>(
    image: &Image<T>,
    w: usize,
    step: usize,
    config: &LbpConfig,
) -> Result<Array2<T>> {
    let origins = patch_origins(image.height(), image.width(), w, step);
    if origins.is_empty() {
        return Err(Error::Dimension(format!(
            "{}x{} image holds no {w}x{w} patch with step {step}",
            image.height(),
            image.width()
        )));
    }
    let bins = config.pattern_count();
    let mut out = Array2::zeros((origins.len(), 3 * bins));
    for (row, &(y, x)) in origins.iter().enumerate() {
        for (c, plane) in image.channels().iter().enumerate() {
            let patch = plane.slice(s![y..y + w, x..x + w]);
            let hist = l1_normalize::<T>(&lbp_histogram(patch, config)?);
            out.slice_mut(s![row, c * bins..(c + 1) * bins])
                .iter_mut()
                .zip(hist)
                .for_each(|(dst, v)| *dst = v);
        }
    }
    Ok(out)
}

/// Bag of dense LBP: patch descriptors quantized to their nearest codebook
/// centre, returned as a histogram over centres that sums to 1.
pub fn bag_of_dense_lbp<T: Scalar>(
    image: &Image<T>,
    codebook: &Codebook<T>,
    w: usize,
    step: usize,
    config: &LbpConfig,
) -> Result<Vec<T>> {
    let descriptors = dense_lbp_descriptors(image, w, step, config)?;
    if descriptors.ncols() != codebook.dim() {
        return Err(Error::Dimension(format!(
            "codebook dimension {} does not match patch descriptor dimension {}",
            codebook.dim(),
            descriptors.ncols()
        )));
    }
    let mut counts = vec![0u64; codebook.size()];
    for row in descriptors.rows() {
        counts[codebook.nearest(row.as_slice().expect("standard layout"))] += 1;
    }
    Ok(l1_normalize(&counts))
}
