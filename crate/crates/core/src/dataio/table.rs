use std::collections::HashSet;

use ndarray::{Array2, Axis};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::l2_normalize;
use crate::scalar::Scalar;

/// Labeled multi-view feature vectors: `F` views over the same `N` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable<T> {
    sample_ids: Vec<String>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    views: Vec<Array2<T>>,
    view_names: Vec<String>,
}

impl<T: Scalar> FeatureTable<T> {
    pub fn new(
        sample_ids: Vec<String>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        views: Vec<Array2<T>>,
        view_names: Vec<String>,
    ) -> Result<Self> {
        let n = sample_ids.len();
        if n == 0 {
            return Err(Error::Invalid("feature table has no samples".into()));
        }
        if views.is_empty() {
            return Err(Error::Invalid("feature table has no views".into()));
        }
        if view_names.len() != views.len() {
            return Err(Error::Invalid(format!(
                "{} view names for {} views",
                view_names.len(),
                views.len()
            )));
        }
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {} samples",
                labels.len(),
                n
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Invalid(format!(
                "class index {bad} outside [0, {})",
                class_names.len()
            )));
        }
        for (name, view) in view_names.iter().zip(&views) {
            if view.nrows() != n {
                return Err(Error::Dimension(format!(
                    "view `{name}` has {} rows, expected {n}",
                    view.nrows()
                )));
            }
            if view.ncols() == 0 {
                return Err(Error::Dimension(format!("view `{name}` has dimension 0")));
            }
            if let Some(((r, c), _)) = view.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::Invalid(format!(
                    "view `{name}` has a non-finite value at sample `{}` component {c}",
                    sample_ids[r]
                )));
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invalid(format!("duplicate sample id `{id}`")));
            }
        }
        Ok(Self {
            sample_ids,
            labels,
            class_names,
            views,
            view_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn views(&self) -> &[Array2<T>] {
        &self.views
    }

    pub fn view(&self, f: usize) -> &Array2<T> {
        &self.views[f]
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows `indices` (in that order) as a new table; the class list is kept
    /// so class indices stay comparable with the parent table.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_samples()) {
            return Err(Error::Invalid(format!("sample index {bad} out of range")));
        }
        Ok(Self {
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            views: self
                .views
                .iter()
                .map(|v| v.select(Axis(0), indices))
                .collect(),
            view_names: self.view_names.clone(),
        })
    }

    /// Every row of every view scaled to unit Euclidean norm.
    pub fn l2_normalized(&self) -> Self {
        let mut out = self.clone();
        for view in &mut out.views {
            for mut row in view.rows_mut() {
                let normed = l2_normalize(row.as_slice().expect("standard layout"));
                row.iter_mut().zip(normed).for_each(|(dst, v)| *dst = v);
            }
        }
        out
    }

    /// All views concatenated into one, each row re-normalized to unit norm.
    pub fn concatenated(&self) -> Self {
        let dim: usize = self.views.iter().map(|v| v.ncols()).sum();
        let mut joined = Array2::zeros((self.n_samples(), dim));
        for (i, mut row) in joined.rows_mut().into_iter().enumerate() {
            let parts: Vec<T> = self
                .views
                .iter()
                .flat_map(|v| v.row(i).to_vec())
                .collect();
            row.iter_mut()
                .zip(l2_normalize(&parts))
                .for_each(|(dst, v)| *dst = v);
        }
        Self {
            sample_ids: self.sample_ids.clone(),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
            views: vec![joined],
            view_names: vec![self.view_names.join("+")],
        }
    }

    /// Replaces the values of one view, keeping ids and labels.
    pub fn with_view(&self, f: usize, values: Array2<T>) -> Result<Self> {
        if f >= self.n_views() {
            return Err(Error::Invalid(format!("view index {f} out of range")));
        }
        let mut views = self.views.clone();
        views[f] = values;
        Self::new(
            self.sample_ids.clone(),
            self.labels.clone(),
            self.class_names.clone(),
            views,
            self.view_names.clone(),
        )
    }

    /// SHA-256 over ids, labels and the exact bits of every value.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for (id, &l) in self.sample_ids.iter().zip(&self.labels) {
            h.update(id.as_bytes());
            h.update([0]);
            h.update((l as u64).to_le_bytes());
        }
        for (name, view) in self.view_names.iter().zip(&self.views) {
            h.update(name.as_bytes());
            h.update([0]);
            h.update((view.ncols() as u64).to_le_bytes());
            for v in view.iter() {
                h.update(v.as_f64().to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> FeatureTable<f64> {
        FeatureTable::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0, 1, 0],
            vec!["x".into(), "y".into()],
            vec![array![[3.0, 4.0], [1.0, 0.0], [0.0, 0.0]], array![[1.0], [2.0], [3.0]]],
            vec!["v0".into(), "v1".into()],
        )
        .unwrap()
    }

    #[test]
    fn validates_shapes_and_ids() {
        let t = toy();
        assert_eq!(t.n_samples(), 3);
        assert_eq!(t.n_views(), 2);
        assert_eq!(t.class_counts(), vec![2, 1]);

        let dup = FeatureTable::<f64>::new(
            vec!["a".into(), "a".into()],
            vec![0, 0],
            vec!["x".into()],
            vec![array![[1.0], [2.0]]],
            vec!["v".into()],
        );
        assert!(matches!(dup, Err(Error::Invalid(m)) if m.contains("duplicate")));

        let bad_label = FeatureTable::<f64>::new(
            vec!["a".into()],
            vec![2],
            vec!["x".into()],
            vec![array![[1.0]]],
            vec!["v".into()],
        );
        assert!(bad_label.is_err());

        let nan = FeatureTable::<f64>::new(
            vec!["a".into()],
            vec![0],
            vec!["x".into()],
            vec![array![[f64::NAN]]],
            vec!["v".into()],
        );
        assert!(nan.is_err());
    }

    #[test]
    fn subset_and_normalization() {
        let t = toy();
        let s = t.subset(&[2, 0]).unwrap();
        assert_eq!(s.sample_ids(), &["c".to_string(), "a".to_string()]);
        assert_eq!(s.view(1)[[1, 0]], 1.0);
        let n = t.l2_normalized();
        assert_eq!(n.view(0).row(0).to_vec(), vec![0.6, 0.8]);
        assert_eq!(n.view(0).row(2).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn concatenation_is_unit_norm() {
        let c = toy().concatenated();
        assert_eq!(c.n_views(), 1);
        assert_eq!(c.view(0).ncols(), 3);
        let r: f64 = c.view(0).row(0).iter().map(|v| v * v).sum();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hash_tracks_content() {
        let t = toy();
        let mut v = t.view(1).clone();
        v[[0, 0]] = 1.5;
        let u = t.with_view(1, v).unwrap();
        assert_ne!(t.content_hash(), u.content_hash());
        assert_eq!(t.content_hash(), toy().content_hash());
    }
}
