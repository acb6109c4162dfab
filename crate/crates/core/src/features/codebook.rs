use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{stream, SeededRng};
use crate::scalar::Scalar;

/// k-means cluster centres used to quantize local descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    pub centers: Array2<T>,
    pub seed: u64,
    pub iterations: usize,
    /// Sum of squared distances from each descriptor to its centre.
    pub inertia: T,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<T>,
}

impl<T: Scalar> Codebook<T> {
    pub fn size(&self) -> usize {
        self.centers.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    /// Index of the nearest centre (Euclidean; ties go to the lower index).
    pub fn nearest(&self, x: &[T]) -> usize {
        nearest(&self.centers, x).0
    }
}

fn sq_dist<T: Scalar>(a: ArrayView1<'_, T>, b: &[T]) -> T {
    a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum()
}

fn nearest<T: Scalar>(centers: &Array2<T>, x: &[T]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (k, c) in centers.outer_iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn assign<T: Scalar>(data: &Array2<T>, centers: &Array2<T>) -> Vec<(usize, T)> {
    (0..data.nrows())
        .into_par_iter()
        .map(|i| nearest(centers, data.row(i).as_slice().expect("standard layout")))
        .collect()
}

fn kmeans_pp<T: Scalar>(data: &Array2<T>, k: usize, rng: &mut SeededRng) -> Array2<T> {
    let n = data.nrows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.below(n as u64) as usize);
    let row = |i: usize| data.row(i).to_vec();
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(data.row(i), &row(chosen[0])).as_f64())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.unit() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive mass"))
        } else {
            // Only duplicates remain: take the lowest unused index.
            (0..n).find(|i| !chosen.contains(i)).expect("n >= k")
        };
        chosen.push(next);
        let c = row(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.row(i), &c).as_f64());
        }
    }
    data.select(Axis(0), &chosen)
}

/// Lloyd's k-means with k-means++ seeding drawn from the seeded generator.
/// Stops after `max_iter` assignment steps or once no assignment changes.
/// Empty clusters keep their previous centre.
pub fn build_codebook<T: Scalar>(
    descriptors: &Array2<T>,
    size: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Codebook<T>> {
    let n = descriptors.nrows();
    if size == 0 {
        return Err(Error::Invalid("codebook size must be positive".into()));
    }
    if n < size {
        return Err(Error::Invalid(format!(
            "{n} descriptors cannot form {size} clusters"
        )));
    }
    if descriptors.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("descriptors contain non-finite values".into()));
    }
    let descriptors = descriptors.as_standard_layout().into_owned();
    let mut rng = SeededRng::new(seed, stream::KMEANS);
    let mut centers = kmeans_pp(&descriptors, size, &mut rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        let assigned = assign(&descriptors, &centers);
        iterations += 1;
        history.push(assigned.iter().map(|&(_, d)| d).sum::<T>());
        let new_labels: Vec<usize> = assigned.iter().map(|&(k, _)| k).collect();
        if new_labels == labels {
            break;
        }
        labels = new_labels;
        let mut sums = Array2::<T>::zeros(centers.dim());
        let mut counts = vec![0usize; size];
        for (i, &k) in labels.iter().enumerate() {
            counts[k] += 1;
            sums.row_mut(k)
                .zip_mut_with(&descriptors.row(i), |s, &d| *s = *s + d);
        }
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 {
                let mean = sums.row(k).mapv(|v| v / T::of_usize(c));
                centers.row_mut(k).assign(&mean);
            }
        }
    }
    let inertia = assign(&descriptors, &centers).iter().map(|&(_, d)| d).sum();
    Ok(Codebook {
        centers,
        seed,
        iterations,
        inertia,
        inertia_history: history,
    })
}

/// Writes `# k=<n> seed=<u64> inertia=<f>` followed by one centre per row.
pub fn write_codebook<T: Scalar>(
    path: impl AsRef<Path>,
    codebook: &Codebook<T>,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for c in comments {
        writeln!(out, "# {c}").map_err(io)?;
    }
    writeln!(
        out,
        "# k={} seed={} inertia={}",
        codebook.size(),
        codebook.seed,
        codebook.inertia
    )
    .map_err(io)?;
    writeln!(out, "# iterations={}", codebook.iterations).map_err(io)?;
    for row in codebook.centers.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", fields.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_codebook<T: Scalar>(path: impl AsRef<Path>) -> Result<Codebook<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut k = None;
    let mut seed = 0u64;
    let mut inertia = T::nan();
    let mut iterations = 0usize;
    let mut flat = Vec::new();
    let mut dim = None;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = n + 1;
        if let Some(comment) = line.strip_prefix('#') {
            for kv in comment.split_whitespace() {
                let bad = |what: &str| Error::parse(path, lineno, format!("bad {what} `{kv}`"));
                match kv.split_once('=') {
                    Some(("k", v)) => k = Some(v.parse::<usize>().map_err(|_| bad("k"))?),
                    Some(("seed", v)) => seed = v.parse().map_err(|_| bad("seed"))?,
                    Some(("inertia", v)) => inertia = v.parse().map_err(|_| bad("inertia"))?,
                    Some(("iterations", v)) => {
                        iterations = v.parse().map_err(|_| bad("iterations"))?
                    }
                    _ => {}
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<T> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<T>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, lineno, format!("bad value `{f}`")))
            })
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::parse(path, lineno, format!("expected {d} values")))
            }
            _ => {}
        }
        flat.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::parse(path, 1, "codebook has no centres"))?;
    let rows = flat.len() / dim;
    if let Some(k) = k.filter(|&k| k != rows) {
        return Err(Error::parse(path, 1, format!("header says k={k} but {rows} rows follow")));
    }
    Ok(Codebook {
        centers: Array2::from_shape_vec((rows, dim), flat).map_err(|e| Error::Dimension(e.to_string()))?,
        seed,
        iterations,
        inertia,
        inertia_history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Best 2-partition of sorted 1-D points by exhaustive search over every
    /// labeling; returns the two centres in ascending order.
    fn brute_force_two_means(points: &[f64]) -> (f64, f64) {
        let n = points.len();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for mask in 1..(1u32 << n) - 1 {
            let (a, b): (Vec<f64>, Vec<f64>) = {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (i, &p) in points.iter().enumerate() {
                    if mask >> i & 1 == 1 { a.push(p) } else { b.push(p) }
                }
                (a, b)
            };
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            let sse: f64 = a.iter().map(|p| (p - ma).powi(2)).sum::<f64>()
                + b.iter().map(|p| (p - mb).powi(2)).sum::<f64>();
            if sse < best.0 {
                best = (sse, ma.min(mb), ma.max(mb));
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn two_clusters_match_exhaustive_partition() {
        let pts = [0.0, 0.1, 10.0, 10.1];
        let (lo, hi) = brute_force_two_means(&pts);
        assert!((lo - 0.05).abs() < 1e-12 && (hi - 10.05).abs() < 1e-12);
        let data = Array2::from_shape_vec((4, 1), pts.to_vec()).unwrap();
        for seed in 0..10 {
            let cb = build_codebook(&data, 2, seed, 50).unwrap();
            let mut c: Vec<f64> = cb.centers.iter().copied().collect();
            c.sort_by(f64::total_cmp);
            assert!((c[0] - lo).abs() < 1e-12, "seed {seed}: {c:?}");
            assert!((c[1] - hi).abs() < 1e-12, "seed {seed}: {c:?}");
        }
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let data = Array2::from_shape_fn((1024, 3), |(i, j)| (i * 3 + j) as f64 * 0.01);
        let cb = build_codebook(&data, 1024, 7, 5).unwrap();
        assert_eq!(cb.size(), 1024);
        assert_eq!(cb.inertia, 0.0);
    }

    #[test]
    fn deterministic_and_inertia_non_increasing() {
        let mut rng = SeededRng::new(11, 0);
        let data = Array2::from_shape_fn((300, 4), |_| rng.normal());
        let a = build_codebook(&data, 8, 3, 100).unwrap();
        let b = build_codebook(&data, 8, 3, 100).unwrap();
        assert_eq!(a, b);
        for w in a.inertia_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", a.inertia_history);
        }
        assert!(a.inertia <= *a.inertia_history.last().unwrap() + 1e-9);
    }

    #[test]
    fn too_few_descriptors() {
        let data = array![[1.0], [2.0]];
        assert!(build_codebook(&data, 3, 0, 10).is_err());
    }

    #[test]
    fn duplicates_do_not_stall_seeding() {
        let data = Array2::from_elem((5, 2), 1.0);
        let cb = build_codebook(&data, 3, 0, 10).unwrap();
        assert_eq!(cb.inertia, 0.0);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let cb = Codebook {
            centers: array![[0.0], [2.0]],
            seed: 0,
            iterations: 0,
            inertia: 0.0,
            inertia_history: vec![],
        };
        assert_eq!(cb.nearest(&[1.0]), 0);
        assert_eq!(cb.nearest(&[1.5]), 1);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = array![[0.0, 1.0], [0.1, 1.1], [5.0, 5.0], [5.2, 4.9]];
        let cb = build_codebook(&data, 2, 9, 20).unwrap();
        let p = dir.path().join("cb.csv");
        write_codebook(&p, &cb, &[]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# k=2 seed=9 inertia="));
        let back: Codebook<f64> = read_codebook(&p).unwrap();
        assert_eq!(back.centers, cb.centers);
        assert_eq!(back.inertia, cb.inertia);
        assert_eq!(back.iterations, cb.iterations);
    }
}
