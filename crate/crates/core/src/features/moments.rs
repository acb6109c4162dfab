use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{l1_normalize, lbp_histogram, Image, LbpConfig};

/// Per-patch mean and population standard deviation of one plane over a
/// non-overlapping grid of `w × w` patches (`⌊H/w⌋ × ⌊W/w⌋` cells).
pub fn dense_moments<T: Scalar>(plane: &Array2<T>, w: usize) -> Result<(Array2<T>, Array2<T>)> {
    if w == 0 {
        return Err(Error::Invalid("patch size must be positive".into()));
    }
    let (h, wd) = plane.dim();
    let (gh, gw) = (h / w, wd / w);
    if gh == 0 || gw == 0 {
        return Err(Error::Dimension(format!(
            "{h}x{wd} image is smaller than one {w}x{w} patch"
        )));
    }
    let count = T::of_usize(w * w);
    let mut mean = Array2::zeros((gh, gw));
    let mut std = Array2::zeros((gh, gw));
    for gy in 0..gh {
        for gx in 0..gw {
            let patch = plane.slice(s![gy * w..(gy + 1) * w, gx * w..(gx + 1) * w]);
            let m = patch.iter().copied().sum::<T>() / count;
            let var = patch.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / count;
            mean[[gy, gx]] = m;
            std[[gy, gx]] = var.sqrt();
        }
    }
    Ok((mean, std))
}

/// LBP of dense moments: for each RGB channel, the LBP histograms of the
/// patch-mean matrix and of the patch-std matrix, each scaled to sum 1,
/// concatenated as `[R mean, R std, G mean, G std, B mean, B std]`.
pub fn lbp_of_dense_moments<T: Scalar>(image: &Image<T>, w: usize, config: &LbpConfig) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(6 * config.pattern_count());
    for plane in image.channels() {
        let (mean, std) = dense_moments(plane, w)?;
        if mean.nrows() < config.min_side() || mean.ncols() < config.min_side() {
            return Err(Error::Dimension(format!(
                "{}x{} moment grid (patch size {w}) is smaller than the {s}x{s} LBP support",
                mean.nrows(),
                mean.ncols(),
                s = config.min_side()
            )));
        }
        out.extend(l1_normalize::<T>(&lbp_histogram(mean.view(), config)?));
        out.extend(l1_normalize::<T>(&lbp_histogram(std.view(), config)?));
    }
    Ok(out)
}
