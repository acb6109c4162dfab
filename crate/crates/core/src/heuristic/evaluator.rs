use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;

use crate::dataio::FoldAssignment;
use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, KernelSpec};
use crate::mkl::{predict_mkl, train_lp_mkl, MklParams};
use crate::scalar::Scalar;

struct FoldBlock<T> {
    train: Vec<usize>,
    test: Vec<usize>,
    train_grams: Vec<GramMatrix<T>>,
    test_grams: Vec<GramMatrix<T>>,
}

/// Per-fold train×train and held-out×train blocks of every kernel, cut once
/// and shared by all evaluations (and all C values) of one run.
pub struct FoldGrams<T> {
    blocks: Vec<FoldBlock<T>>,
    specs: Vec<KernelSpec<T>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl<T: Scalar> FoldGrams<T> {
    pub fn new(
        specs: &[KernelSpec<T>],
        grams: &[GramMatrix<T>],
        labels: &[usize],
        folds: &FoldAssignment,
    ) -> Result<Self> {
        let n = labels.len();
        if specs.len() != grams.len() {
            return Err(Error::Dimension(format!("{} specs for {} Grams", specs.len(), grams.len())));
        }
        if folds.fold_of.len() != n {
            return Err(Error::Dimension(format!(
                "{} fold assignments for {n} samples",
                folds.fold_of.len()
            )));
        }
        if let Some(g) = grams.iter().find(|g| !g.is_square() || g.nrows() != n) {
            return Err(Error::Dimension(format!(
                "{}x{} Gram for {n} samples",
                g.nrows(),
                g.ncols()
            )));
        }
        let blocks = (0..folds.k)
            .map(|f| {
                let train = folds.retained(f);
                let test = folds.held_out(f);
                FoldBlock {
                    train_grams: grams.iter().map(|g| g.select(&train, &train)).collect(),
                    test_grams: grams.iter().map(|g| g.select(&test, &train)).collect(),
                    train,
                    test,
                }
            })
            .collect();
        Ok(Self {
            blocks,
            specs: specs.to_vec(),
            labels: labels.to_vec(),
            n_classes: labels.iter().max().map_or(0, |&m| m + 1),
        })
    }

    pub fn n_kernels(&self) -> usize {
        self.specs.len()
    }

    pub fn n_folds(&self) -> usize {
        self.blocks.len()
    }
}

/// Memoized cross-validated accuracy of kernel sets for one MKL setting.
///
/// Each evaluation trains one-vs-all MKL on every fold's retained part and
/// scores the pooled held-out accuracy. Results are cached by the sorted
/// kernel-index set; cache hits do not count as evaluations or trainings.
pub struct CvEvaluator<'a, T> {
    data: &'a FoldGrams<T>,
    params: MklParams<T>,
    memo: Mutex<BTreeMap<Vec<usize>, f64>>,
    evaluate_calls: AtomicUsize,
    trainings: AtomicUsize,
    warnings: Mutex<BTreeSet<String>>,
}

impl<'a, T: Scalar> CvEvaluator<'a, T> {
    pub fn new(data: &'a FoldGrams<T>, params: MklParams<T>) -> Self {
        Self {
            data,
            params,
            memo: Mutex::new(BTreeMap::new()),
            evaluate_calls: AtomicUsize::new(0),
            trainings: AtomicUsize::new(0),
            warnings: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn params(&self) -> &MklParams<T> {
        &self.params
    }

    /// Number of distinct kernel sets evaluated so far.
    pub fn evaluate_calls(&self) -> usize {
        self.evaluate_calls.load(Ordering::SeqCst)
    }

    /// Number of binary MKL problems trained so far.
    pub fn classifier_trainings(&self) -> usize {
        self.trainings.load(Ordering::SeqCst)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.warnings.lock().expect("warning lock").iter().cloned().collect()
    }

    pub fn cached(&self, set: &[usize]) -> Option<f64> {
        self.memo.lock().expect("memo lock").get(&key(set)).copied()
    }

    /// Pooled held-out accuracy of one-vs-all MKL on `set`.
    pub fn evaluate(&self, set: &[usize]) -> Result<f64> {
        let key = key(set);
        if key.is_empty() {
            return Err(Error::Invalid("cannot evaluate an empty kernel set".into()));
        }
        if let Some(&bad) = key.iter().find(|&&m| m >= self.data.n_kernels()) {
            return Err(Error::Invalid(format!("kernel index {bad} out of range")));
        }
        if let Some(v) = self.cached(&key) {
            return Ok(v);
        }
        let score = self.compute(&key)?;
        self.evaluate_calls.fetch_add(1, Ordering::SeqCst);
        self.memo.lock().expect("memo lock").insert(key, score);
        Ok(score)
    }

    /// Evaluates several sets concurrently; results follow input order.
    pub fn evaluate_many(&self, sets: &[Vec<usize>]) -> Result<Vec<f64>> {
        let mut unique: Vec<Vec<usize>> = sets.iter().map(|s| key(s)).collect();
        unique.sort();
        unique.dedup();
        unique
            .par_iter()
            .map(|s| self.evaluate(s).map(|_| ()))
            .collect::<Result<Vec<()>>>()?;
        sets.iter().map(|s| self.evaluate(s)).collect()
    }

    fn compute(&self, set: &[usize]) -> Result<f64> {
        let data = self.data;
        let specs: Vec<KernelSpec<T>> = set.iter().map(|&m| data.specs[m]).collect();
        let jobs: Vec<(usize, usize)> = (0..data.blocks.len())
            .flat_map(|f| (0..data.n_classes).map(move |k| (f, k)))
            .collect();
        let scores = jobs
            .par_iter()
            .map(|&(f, k)| -> Result<Option<Vec<T>>> {
                let block = &data.blocks[f];
                if block.test.is_empty() {
                    return Ok(None);
                }
                let y: Vec<i8> = block
                    .train
                    .iter()
                    .map(|&i| if data.labels[i] == k { 1 } else { -1 })
                    .collect();
                if !y.contains(&1) || !y.contains(&-1) {
                    self.warnings.lock().expect("warning lock").insert(format!(
                        "fold {f}: class {k} absent from the training part; its binary problem is skipped"
                    ));
                    return Ok(None);
                }
                let train: Vec<&GramMatrix<T>> = set.iter().map(|&m| &block.train_grams[m]).collect();
                let test: Vec<&GramMatrix<T>> = set.iter().map(|&m| &block.test_grams[m]).collect();
                let model = train_lp_mkl(&specs, &train, &y, &self.params)?;
                self.trainings.fetch_add(1, Ordering::SeqCst);
                predict_mkl(&model, &test).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut correct = 0usize;
        let mut total = 0usize;
        for (f, block) in data.blocks.iter().enumerate() {
            let per_class = &scores[f * data.n_classes..(f + 1) * data.n_classes];
            for (r, &i) in block.test.iter().enumerate() {
                let mut best = (usize::MAX, T::neg_infinity());
                for (k, s) in per_class.iter().enumerate() {
                    if let Some(s) = s {
                        if best.0 == usize::MAX || s[r] > best.1 {
                            best = (k, s[r]);
                        }
                    }
                }
                total += 1;
                if best.0 == data.labels[i] {
                    correct += 1;
                }
            }
        }
        Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
    }
}

fn key(set: &[usize]) -> Vec<usize> {
    let mut k = set.to_vec();
    k.sort_unstable();
    k.dedup();
    k
}

/// One-off evaluation of a kernel set (no memo shared with other calls).
pub fn evaluate_kernel_set<T: Scalar>(
    specs: &[KernelSpec<T>],
    grams: &[GramMatrix<T>],
    labels: &[usize],
    folds: &FoldAssignment,
    set: &[usize],
    params: MklParams<T>,
) -> Result<f64> {
    let data = FoldGrams::new(specs, grams, labels, folds)?;
    CvEvaluator::new(&data, params).evaluate(set)
}
