use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Circular LBP geometry. Codes are the uniform rotation-invariant mapping:
/// patterns with at most two 0/1 transitions map to their count of set bits
/// (`0..=samples`), everything else to one shared bin, so there are
/// `samples + 2` bins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbpConfig {
    pub radius: f64,
    pub samples: usize,
}

impl Default for LbpConfig {
    fn default() -> Self {
        Self {
            radius: 2.0,
            samples: 16,
        }
    }
}

impl LbpConfig {
    pub fn pattern_count(&self) -> usize {
        self.samples + 2
    }

    /// Smallest matrix side the operator can be evaluated on.
    pub fn min_side(&self) -> usize {
        let g = Geometry::new(self);
        g.before + g.after + 1
    }
}

/// One sampling point as an integer anchor plus bilinear fractions.
#[derive(Clone, Copy, Debug)]
struct Tap {
    dy: isize,
    dx: isize,
    fy: f64,
    fx: f64,
}

struct Geometry {
    taps: Vec<Tap>,
    /// Rows/columns needed before and after the centre pixel.
    before: usize,
    after: usize,
}

impl Geometry {
    fn new(cfg: &LbpConfig) -> Self {
        let p = cfg.samples as f64;
        // Offsets are rounded to 1e-6 so on-grid points land exactly on pixels.
        let snap = |v: f64| (v * 1e6).round() / 1e6;
        let taps: Vec<Tap> = (0..cfg.samples)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / p;
                let y = snap(-cfg.radius * theta.sin());
                let x = snap(cfg.radius * theta.cos());
                Tap {
                    dy: y.floor() as isize,
                    dx: x.floor() as isize,
                    fy: y - y.floor(),
                    fx: x - x.floor(),
                }
            })
            .collect();
        let lo = taps.iter().flat_map(|t| [t.dy, t.dx]).min().unwrap_or(0);
        let hi = taps
            .iter()
            .flat_map(|t| [t.dy + (t.fy > 0.0) as isize, t.dx + (t.fx > 0.0) as isize])
            .max()
            .unwrap_or(0);
        Self {
            taps,
            before: (-lo).max(0) as usize,
            after: hi.max(0) as usize,
        }
    }
}

fn uniform_code(bits: &[bool]) -> usize {
    let p = bits.len();
    let transitions = (0..p).filter(|&i| bits[i] != bits[(i + 1) % p]).count();
    if transitions <= 2 {
        bits.iter().filter(|&&b| b).count()
    } else {
        p + 1
    }
}

/// Histogram of uniform rotation-invariant LBP codes over every pixel whose
/// full circular neighbourhood lies inside the matrix.
///
/// A neighbour sets its bit when its (bilinearly interpolated) value is
/// `>=` the centre. Interpolation runs on differences to the centre, so
/// shifting the input by a constant leaves integer-valued inputs' codes
/// unchanged exactly.
pub fn lbp_histogram<T: Scalar>(matrix: ArrayView2<'_, T>, config: &LbpConfig) -> Result<Vec<u64>> {
    if config.samples == 0 || config.samples > 64 || !(config.radius > 0.0) {
        return Err(Error::Invalid(format!("unsupported LBP geometry {config:?}")));
    }
    let g = Geometry::new(config);
    let (h, w) = matrix.dim();
    let side = g.before + g.after + 1;
    if h < side || w < side {
        return Err(Error::Dimension(format!(
            "{h}x{w} matrix is smaller than the {side}x{side} LBP support"
        )));
    }
    let taps: Vec<(isize, isize, T, T)> = g
        .taps
        .iter()
        .map(|t| (t.dy, t.dx, T::of(t.fy), T::of(t.fx)))
        .collect();
    let mut hist = vec![0u64; config.pattern_count()];
    let mut bits = vec![false; config.samples];
    for r in g.before..h - g.after {
        for c in g.before..w - g.after {
            let centre = matrix[[r, c]];
            let at = |dy: isize, dx: isize| {
                matrix[[(r as isize + dy) as usize, (c as isize + dx) as usize]] - centre
            };
            for (bit, &(dy, dx, fy, fx)) in bits.iter_mut().zip(&taps) {
                let top = if fx > T::zero() {
                    let a = at(dy, dx);
                    a + fx * (at(dy, dx + 1) - a)
                } else {
                    at(dy, dx)
                };
                let value = if fy > T::zero() {
                    let bottom = if fx > T::zero() {
                        let a = at(dy + 1, dx);
                        a + fx * (at(dy + 1, dx + 1) - a)
                    } else {
                        at(dy + 1, dx)
                    };
                    top + fy * (bottom - top)
                } else {
                    top
                };
                *bit = value >= T::zero();
            }
            hist[uniform_code(&bits)] += 1;
        }
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn cfg() -> LbpConfig {
        LbpConfig::default()
    }

    #[test]
    fn eighteen_bins() {
        assert_eq!(cfg().pattern_count(), 18);
        let m = Array2::from_shape_fn((9, 7), |(y, x)| ((y * 31 + x * 17) % 11) as f64);
        assert_eq!(lbp_histogram(m.view(), &cfg()).unwrap().len(), 18);
    }

    #[test]
    fn constant_matrix_is_all_ones_pattern() {
        let m = Array2::from_elem((10, 12), 42.0f64);
        let h = lbp_histogram(m.view(), &cfg()).unwrap();
        assert_eq!(h[16], 6 * 8);
        assert_eq!(h.iter().sum::<u64>(), 6 * 8);
    }

    #[test]
    fn five_by_five_has_one_interior_pixel() {
        assert_eq!(cfg().min_side(), 5);
        let m = Array2::from_shape_fn((5, 5), |(y, x)| (y * 5 + x) as f64);
        assert_eq!(lbp_histogram(m.view(), &cfg()).unwrap().iter().sum::<u64>(), 1);
        let small = Array2::<f64>::zeros((4, 9));
        assert!(lbp_histogram(small.view(), &cfg()).is_err());
    }

    #[test]
    fn local_maximum_and_minimum() {
        let mut m = Array2::from_elem((5, 5), 1.0f64);
        m[[2, 2]] = 9.0;
        // Bright centre: no neighbour reaches it.
        assert_eq!(lbp_histogram(m.view(), &cfg()).unwrap()[0], 1);
        m[[2, 2]] = -9.0;
        assert_eq!(lbp_histogram(m.view(), &cfg()).unwrap()[16], 1);
    }

    #[test]
    fn edge_is_uniform_and_noise_is_not() {
        // Vertical step: half the circle brighter → 2 transitions.
        let m = Array2::from_shape_fn((5, 5), |(_, x)| if x >= 3 { 10.0 } else { 0.0 });
        let h = lbp_histogram(m.view(), &cfg()).unwrap();
        assert_eq!(h[17], 0);
        // Checkerboard yields many transitions.
        let m = Array2::from_shape_fn((5, 5), |(y, x)| ((y + x) % 2) as f64);
        let h = lbp_histogram(m.view(), &cfg()).unwrap();
        assert_eq!(h.iter().sum::<u64>(), 1);
    }

    fn texture(seed: u64, n: usize) -> Array2<f64> {
        let mut rng = SeededRng::new(seed, 0);
        Array2::from_shape_fn((n, n), |_| (rng.below(256)) as f64)
    }

    #[test]
    fn quarter_turn_preserves_histogram() {
        for seed in 0..5 {
            let m = texture(seed, 24);
            let (h, w) = m.dim();
            let rot = Array2::from_shape_fn((w, h), |(y, x)| m[[x, w - 1 - y]]);
            let a = lbp_histogram(m.view(), &cfg()).unwrap();
            let b = lbp_histogram(rot.view(), &cfg()).unwrap();
            let total = a.iter().sum::<u64>() as f64;
            let l1: f64 = a
                .iter()
                .zip(&b)
                .map(|(&x, &y)| (x as f64 - y as f64).abs() / total)
                .sum();
            assert!(l1 < 0.05, "seed {seed}: L1 distance {l1}");
        }
    }

    proptest! {
        #[test]
        fn shift_invariant(seed in any::<u64>(), shift in -1000i32..1000) {
            let m = texture(seed, 9);
            let shifted = m.mapv(|v| v + shift as f64);
            prop_assert_eq!(
                lbp_histogram(m.view(), &cfg()).unwrap(),
                lbp_histogram(shifted.view(), &cfg()).unwrap()
            );
        }
    }
}
