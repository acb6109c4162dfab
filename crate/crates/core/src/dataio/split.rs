use crate::error::{Error, Result};
use crate::rng::{stream, SeededRng};
use crate::scalar::Scalar;

use super::FeatureTable;

/// A seeded, per-class stratified train/test partition of a table.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_fraction: f64,
    /// Ascending sample indices.
    pub train_indices: Vec<usize>,
    /// Ascending sample indices.
    pub test_indices: Vec<usize>,
}

/// Train count for one class: round-half-up of `fraction * size`, clamped so
/// that both sides keep at least one sample.
pub(crate) fn train_count(fraction: f64, size: usize) -> usize {
    // The epsilon absorbs representation error such as 0.15 * 10 = 1.4999…
    let raw = (fraction * size as f64 + 0.5 + 1e-9).floor() as usize;
    raw.clamp(1, size - 1)
}

/// Per-class indices in table order; classes without samples are empty.
fn members_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    members
}

pub fn stratified_split<T: Scalar>(
    table: &FeatureTable<T>,
    fraction: f64,
    seed: u64,
) -> Result<SplitManifest> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Invalid(format!(
            "train fraction {fraction} outside (0, 1)"
        )));
    }
    let members = members_by_class(table.labels(), table.n_classes());
    let mut rng = SeededRng::new(seed, stream::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut idx) in members.into_iter().enumerate() {
        match idx.len() {
            0 => continue,
            1 => {
                return Err(Error::Invalid(format!(
                    "class `{}` has a single sample and cannot be stratified",
                    table.class_names()[class]
                )))
            }
            size => {
                rng.shuffle(&mut idx);
                let n_train = train_count(fraction, size);
                train.extend_from_slice(&idx[..n_train]);
                test.extend_from_slice(&idx[n_train..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitManifest {
        seed,
        train_fraction: fraction,
        train_indices: train,
        test_indices: test,
    })
}

/// Stratified k-fold assignment over an ordered list of training samples.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldAssignment {
    pub k: usize,
    /// `fold_of[i]` is the fold of the i-th training sample.
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    /// Shuffles each class with the seeded generator and deals its members
    /// round-robin over folds `0, 1, …, k-1`. A class smaller than `k`
    /// therefore occupies only the first `size` folds.
    pub fn stratified(labels: &[usize], k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Invalid(format!("fold count {k} must be at least 2")));
        }
        let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut rng = SeededRng::new(seed, stream::FOLDS);
        let mut fold_of = vec![0; labels.len()];
        for mut idx in members_by_class(labels, n_classes) {
            rng.shuffle(&mut idx);
            for (pos, i) in idx.into_iter().enumerate() {
                fold_of[i] = pos % k;
            }
        }
        Ok(Self { k, fold_of })
    }

    /// Positions (into the training list) held out by fold `f`.
    pub fn held_out(&self, f: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == f)
            .collect()
    }

    /// Positions used for training when fold `f` is held out.
    pub fn retained(&self, f: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != f)
            .collect()
    }
}

/// Folds over the training side of `manifest`, aligned with
/// `manifest.train_indices`.
pub fn make_folds<T: Scalar>(
    manifest: &SplitManifest,
    table: &FeatureTable<T>,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    let labels: Vec<usize> = manifest
        .train_indices
        .iter()
        .map(|&i| table.labels()[i])
        .collect();
    FoldAssignment::stratified(&labels, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn table(per_class: &[usize]) -> FeatureTable<f64> {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in per_class.iter().enumerate() {
            for j in 0..n {
                ids.push(format!("c{c}_{j}"));
                labels.push(c);
            }
        }
        let n = ids.len();
        FeatureTable::new(
            ids,
            labels,
            (0..per_class.len()).map(|c| format!("class{c}")).collect(),
            vec![Array2::from_shape_fn((n, 2), |(i, j)| (i + j) as f64)],
            vec!["v".into()],
        )
        .unwrap()
    }

    fn train_per_class(t: &FeatureTable<f64>, m: &SplitManifest) -> Vec<usize> {
        let mut c = vec![0; t.n_classes()];
        for &i in &m.train_indices {
            c[t.labels()[i]] += 1;
        }
        c
    }

    #[test]
    fn ten_percent_of_hundred_per_class() {
        let t = table(&[100; 21]);
        let m = stratified_split(&t, 0.10, 5).unwrap();
        assert_eq!(train_per_class(&t, &m), vec![10; 21]);
        assert_eq!(m.test_indices.len(), 21 * 90);
    }

    #[test]
    fn half_of_two_is_one() {
        let t = table(&[2, 2, 2]);
        let m = stratified_split(&t, 0.5, 1).unwrap();
        assert_eq!(train_per_class(&t, &m), vec![1, 1, 1]);
        assert_eq!(m.test_indices.len(), 3);
    }

    #[test]
    fn split_is_deterministic() {
        let t = table(&[7, 9, 4]);
        assert_eq!(
            stratified_split(&t, 0.3, 99).unwrap(),
            stratified_split(&t, 0.3, 99).unwrap()
        );
        assert_ne!(
            stratified_split(&t, 0.3, 99).unwrap(),
            stratified_split(&t, 0.3, 100).unwrap()
        );
    }

    #[test]
    fn singleton_class_rejected() {
        let t = table(&[3, 1]);
        let err = stratified_split(&t, 0.5, 0).unwrap_err();
        assert!(err.to_string().contains("class1"));
        assert!(stratified_split(&t, 1.0, 0).is_err());
        assert!(stratified_split(&t, 0.0, 0).is_err());
    }

    #[test]
    fn folds_exact_division_and_spread() {
        let f = FoldAssignment::stratified(&[0; 10], 5, 3).unwrap();
        let mut sizes = vec![0; 5];
        f.fold_of.iter().for_each(|&x| sizes[x] += 1);
        assert_eq!(sizes, vec![2; 5]);

        let f = FoldAssignment::stratified(&[0; 3], 5, 3).unwrap();
        let mut used = f.fold_of.clone();
        used.sort_unstable();
        assert_eq!(used, vec![0, 1, 2]);

        assert_eq!(
            FoldAssignment::stratified(&[0, 1, 0, 1, 1], 2, 8).unwrap(),
            FoldAssignment::stratified(&[0, 1, 0, 1, 1], 2, 8).unwrap()
        );
        assert!(FoldAssignment::stratified(&[0, 1], 1, 0).is_err());
    }

    #[test]
    fn make_folds_aligns_with_manifest() {
        let t = table(&[10, 10]);
        let m = stratified_split(&t, 0.5, 2).unwrap();
        let f = make_folds(&m, &t, 5, 2).unwrap();
        assert_eq!(f.fold_of.len(), m.train_indices.len());
        for fold in 0..5 {
            let held = f.held_out(fold);
            assert_eq!(held.len(), 2);
            let classes: Vec<usize> = held.iter().map(|&p| t.labels()[m.train_indices[p]]).collect();
            assert!(classes.contains(&0) && classes.contains(&1));
            assert_eq!(f.retained(fold).len(), 8);
        }
    }

    proptest! {
        #[test]
        fn split_partitions_and_matches_counts(
            sizes in proptest::collection::vec(2usize..30, 1..6),
            fraction in 0.01f64..0.99,
            seed in any::<u64>(),
        ) {
            let t = table(&sizes);
            let m = stratified_split(&t, fraction, seed).unwrap();
            let mut all: Vec<usize> = m.train_indices.iter().chain(&m.test_indices).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..t.n_samples()).collect::<Vec<_>>());
            let counts = train_per_class(&t, &m);
            for (c, &size) in sizes.iter().enumerate() {
                let expect = ((fraction * size as f64 + 0.5 + 1e-9).floor() as usize).clamp(1, size - 1);
                prop_assert_eq!(counts[c], expect);
            }
        }

        #[test]
        fn fold_sizes_per_class_differ_by_at_most_one(
            labels in proptest::collection::vec(0usize..4, 1..80),
            k in 2usize..7,
            seed in any::<u64>(),
        ) {
            let f = FoldAssignment::stratified(&labels, k, seed).unwrap();
            for class in 0..4 {
                let mut sizes = vec![0usize; k];
                for (i, &l) in labels.iter().enumerate() {
                    if l == class { sizes[f.fold_of[i]] += 1; }
                }
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
        }
    }
}
