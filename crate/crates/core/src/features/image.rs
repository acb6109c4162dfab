use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// RGB image as three `height × width` intensity planes in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    channels: [Array2<T>; 3],
}

impl<T: Scalar> Image<T> {
    pub fn from_channels(red: Array2<T>, green: Array2<T>, blue: Array2<T>) -> Result<Self> {
        if red.dim() != green.dim() || red.dim() != blue.dim() {
            return Err(Error::Dimension("RGB planes differ in size".into()));
        }
        if red.is_empty() {
            return Err(Error::Invalid("empty image".into()));
        }
        Ok(Self {
            channels: [red, green, blue],
        })
    }

    /// Builds an image from a per-pixel function returning `[r, g, b]`.
    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> [T; 3]) -> Result<Self> {
        let planes: [Array2<T>; 3] =
            std::array::from_fn(|c| Array2::from_shape_fn((height, width), |(y, x)| f(y, x)[c]));
        let [r, g, b] = planes;
        Self::from_channels(r, g, b)
    }

    pub fn width(&self) -> usize {
        self.channels[0].ncols()
    }

    pub fn height(&self) -> usize {
        self.channels[0].nrows()
    }

    pub fn channels(&self) -> &[Array2<T>; 3] {
        &self.channels
    }

    /// Rotated a quarter turn counter-clockwise.
    pub fn rotated90(&self) -> Self {
        let rot = |m: &Array2<T>| {
            let (h, w) = m.dim();
            Array2::from_shape_fn((w, h), |(y, x)| m[[x, w - 1 - y]])
        };
        Self {
            channels: [rot(&self.channels[0]), rot(&self.channels[1]), rot(&self.channels[2])],
        }
    }
}

/// Decodes a PNG or TIFF file into RGB planes.
pub fn load_rgb_image<T: Scalar>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let path = path.as_ref();
    let decoded = ::image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    Image::from_fn(h, w, |y, x| {
        let p = rgb.get_pixel(x as u32, y as u32).0;
        [T::of(p[0] as f64), T::of(p[1] as f64), T::of(p[2] as f64)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let buf = ::image::RgbImage::from_fn(4, 3, |x, y| ::image::Rgb([x as u8, y as u8, 200]));
        buf.save(&path).unwrap();
        let img: Image<f64> = load_rgb_image(&path).unwrap();
        assert_eq!((img.height(), img.width()), (3, 4));
        assert_eq!(img.channels()[0][[2, 3]], 3.0);
        assert_eq!(img.channels()[1][[2, 3]], 2.0);
        assert_eq!(img.channels()[2][[0, 0]], 200.0);
    }

    #[test]
    fn rotation_four_times_is_identity() {
        let img = Image::<f64>::from_fn(3, 5, |y, x| [(y * 5 + x) as f64, 0.0, 1.0]).unwrap();
        let r = img.rotated90();
        assert_eq!((r.height(), r.width()), (5, 3));
        assert_eq!(r.rotated90().rotated90().rotated90(), img);
    }
}
