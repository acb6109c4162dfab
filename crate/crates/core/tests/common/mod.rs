//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use hmkl::dataio::FeatureTable;
use hmkl::kernels::GramMatrix;
use hmkl::rng::SeededRng;
use hmkl::synthetic::{generate, SyntheticSpec};
use ndarray::Array2;

/// Dual objective `Σα − ½ αᵀQα` with `Q = YKY`.
pub fn dual_objective(k: &Array2<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[[i, j]];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}`: `α = clip(v − λy)`
/// with `λ` found by bisection on the monotone residual.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(&vi, &yi)| (vi - lam * yi).clamp(0.0, c)).collect() };
    let residual = |a: &[f64]| a.iter().zip(y).map(|(a, y)| a * y).sum::<f64>();
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient with adaptive restart on the SVM dual.
/// Returns the maximized objective and the solution.
pub fn projected_gradient_svm(k: &Array2<f64>, y: &[f64], c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let q = Array2::from_shape_fn((n, n), |(i, j)| y[i] * y[j] * k[[i, j]]);
    // Largest eigenvalue of Q by power iteration.
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lmax = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[[i, j]] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lmax = norm;
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (lmax * 1.01 + 1e-12);
    let f = |a: &[f64]| -dual_objective(k, y, a);
    let grad = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| q[[i, j]] * a[j]).sum::<f64>() - 1.0).collect() };
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    for it in 0..200_000 {
        let g = grad(&z);
        let xn = project(&z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect::<Vec<_>>(), y, c);
        let moved = xn.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if f(&xn) > f(&x) {
            t = 1.0;
            z = xn.clone();
        } else {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = xn.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / tn * (a - b)).collect();
            t = tn;
        }
        x = xn;
        if it > 100 && moved < 1e-14 {
            break;
        }
    }
    (dual_objective(k, y, &x), x)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(g: &GramMatrix<f64>) -> f64 {
    let n = g.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| g.values()[[i, j]]);
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Uniform `[0, 1)` matrix.
pub fn uniform(rows: usize, cols: usize, rng: &mut SeededRng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.unit())
}

/// Two-class problem: one view whose first coordinate carries the label and
/// one view of pure noise.
pub fn informative_and_noise(n: usize, seed: u64) -> (Array2<f64>, Array2<f64>, Vec<i8>) {
    let mut rng = SeededRng::new(seed, 11);
    let y: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let informative = Array2::from_shape_fn((n, 3), |(i, j)| {
        let shift = if j == 0 { 3.0 * y[i] as f64 } else { 0.0 };
        shift + 0.5 * rng.normal()
    });
    let noise = Array2::from_shape_fn((n, 3), |_| rng.normal());
    (informative, noise, y)
}

/// The six-class benchmark table: a strong and a weak informative view
/// followed by two noise views.
pub fn benchmark_table(seed: u64) -> FeatureTable<f64> {
    let mut spec = SyntheticSpec::mixed(6, 60, 2, 2, 5.0);
    spec.separations[1] = 2.0;
    generate(&spec, seed).unwrap()
}
