use serde::{Deserialize, Serialize};

use crate::dataio::{FeatureTable, FoldAssignment, SplitManifest};
use crate::error::{Error, Result};
use crate::heuristic::{select_kernels_on, CvEvaluator, FoldGrams, Selection};
use crate::kernels::{build_bank, normalize_by_hilbert_std, GramMatrix, KernelBank, KernelFamily, KernelSpec};
use crate::scalar::Scalar;

use super::model::{train_one_vs_all, MulticlassModel};
use super::{Method, PipelineSettings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub kernel: Option<String>,
    pub accuracy: f64,
}

/// Outcome of cross-validated hyperparameter selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvChoice<T> {
    pub c: T,
    /// Kernel chosen for single-kernel baselines.
    pub kernel: Option<KernelSpec<T>>,
    pub cv_accuracy: f64,
    pub grid: Vec<GridPoint>,
}

#[derive(Clone, Debug)]
pub struct Fit<T> {
    pub model: MulticlassModel<T>,
    pub choice: CvChoice<T>,
    pub selection: Option<Selection>,
}

struct Stage<T> {
    bank: KernelBank<T>,
    data: FoldGrams<T>,
    choices: Vec<(T, CvChoice<T>)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum StageKind {
    Raw,
    Concat,
    Mkl,
}

/// Per-split state shared by all methods: CV folds, kernel banks and their
/// fold blocks, and C choices already made. Everything is derived from the
/// training table alone.
pub struct Workspace<'a, T> {
    train: &'a FeatureTable<T>,
    settings: &'a PipelineSettings<T>,
    folds: FoldAssignment,
    concat_table: Option<FeatureTable<T>>,
    raw: Option<Stage<T>>,
    concat: Option<Stage<T>>,
    mkl: Option<Stage<T>>,
}

impl<'a, T: Scalar> Workspace<'a, T> {
    /// Stratified `settings.cv_folds`-fold CV seeded with `fold_seed`.
    pub fn new(train: &'a FeatureTable<T>, settings: &'a PipelineSettings<T>, fold_seed: u64) -> Result<Self> {
        settings.validate()?;
        let folds = FoldAssignment::stratified(train.labels(), settings.cv_folds, fold_seed)?;
        Self::with_folds(train, settings, folds)
    }

    pub fn with_folds(
        train: &'a FeatureTable<T>,
        settings: &'a PipelineSettings<T>,
        folds: FoldAssignment,
    ) -> Result<Self> {
        settings.validate()?;
        if folds.fold_of.len() != train.n_samples() {
            return Err(Error::Dimension(format!(
                "{} fold assignments for {} training samples",
                folds.fold_of.len(),
                train.n_samples()
            )));
        }
        if train.n_classes() < 2 {
            return Err(Error::Invalid("need at least two classes".into()));
        }
        Ok(Self {
            train,
            settings,
            folds,
            concat_table: None,
            raw: None,
            concat: None,
            mkl: None,
        })
    }

    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    fn stage(&mut self, kind: StageKind) -> Result<&mut Stage<T>> {
        let s = self.settings;
        let built = match kind {
            StageKind::Raw => self.raw.is_some(),
            StageKind::Concat => self.concat.is_some(),
            StageKind::Mkl => self.mkl.is_some(),
        };
        if !built {
            let bank = match kind {
                StageKind::Raw => build_bank(self.train, &s.rbf_gammas, &s.chi2_gammas)?,
                StageKind::Concat => {
                    let table = self.concat_table.get_or_insert_with(|| self.train.concatenated());
                    build_bank(table, &s.rbf_gammas, &s.chi2_gammas)?
                }
                StageKind::Mkl => normalize_by_hilbert_std(
                    build_bank(self.train, &s.rbf_gammas, &s.chi2_gammas)?,
                    s.scale,
                )?,
            };
            let data = FoldGrams::new(bank.specs(), bank.grams(), self.train.labels(), &self.folds)?;
            let stage = Stage {
                bank,
                data,
                choices: Vec::new(),
            };
            match kind {
                StageKind::Raw => self.raw = Some(stage),
                StageKind::Concat => self.concat = Some(stage),
                StageKind::Mkl => self.mkl = Some(stage),
            }
        }
        Ok(match kind {
            StageKind::Raw => self.raw.as_mut(),
            StageKind::Concat => self.concat.as_mut(),
            StageKind::Mkl => self.mkl.as_mut(),
        }
        .expect("stage built above"))
    }

    /// The Hilbert-normalized bank used by the MKL methods.
    pub fn mkl_bank(&mut self) -> Result<&KernelBank<T>> {
        Ok(&self.stage(StageKind::Mkl)?.bank)
    }

    fn single_candidates(bank: &KernelBank<T>, view: Option<usize>, family: Option<KernelFamily>) -> Vec<usize> {
        (0..bank.len())
            .filter(|&m| view.is_none_or(|f| bank.spec(m).view == f))
            .filter(|&m| family.is_none_or(|k| bank.spec(m).family == k))
            .collect()
    }

    /// CV choice of C (and, for single-kernel baselines, of the kernel).
    pub fn choose(&mut self, method: Method) -> Result<CvChoice<T>> {
        let settings = self.settings;
        match method {
            Method::SingleKernel { view, family } => {
                if view >= self.train.n_views() {
                    return Err(Error::Invalid(format!("{method}: no view {view}")));
                }
                let stage = self.stage(StageKind::Raw)?;
                let cands = Self::single_candidates(&stage.bank, Some(view), family);
                choose_single(stage, &cands, settings, method)
            }
            Method::ConcatSingleKernel { family } => {
                let stage = self.stage(StageKind::Concat)?;
                let cands = Self::single_candidates(&stage.bank, None, family);
                choose_single(stage, &cands, settings, method)
            }
            Method::MklLp { p } => choose_all(self.stage(StageKind::Mkl)?, settings, T::of(p)),
            Method::HeuristicMkl => choose_all(self.stage(StageKind::Mkl)?, settings, T::of(2.0)),
        }
    }

    /// Hyperparameter selection, kernel selection (heuristic only) and final
    /// one-vs-all training on the whole training table.
    pub fn fit(&mut self, method: Method) -> Result<Fit<T>> {
        let choice = self.choose(method)?;
        match method {
            Method::SingleKernel { .. } | Method::ConcatSingleKernel { .. } => {
                let kind = if matches!(method, Method::SingleKernel { .. }) {
                    StageKind::Raw
                } else {
                    StageKind::Concat
                };
                let spec = choice.kernel.expect("single-kernel choice names a kernel");
                let stage = self.stage(kind)?;
                let m = stage.bank.index_of(&spec).expect("chosen kernel is in the bank");
                let model = self.train_model(kind, method, &[m], choice.c, T::one(), None)?;
                Ok(Fit {
                    model,
                    choice,
                    selection: None,
                })
            }
            Method::MklLp { p } => {
                let all: Vec<usize> = (0..self.stage(StageKind::Mkl)?.bank.len()).collect();
                let model = self.train_model(StageKind::Mkl, method, &all, choice.c, T::of(p), None)?;
                Ok(Fit {
                    model,
                    choice,
                    selection: None,
                })
            }
            Method::HeuristicMkl => {
                let two = T::of(2.0);
                let params = self.settings.mkl_params(choice.c, two);
                let stage = self.stage(StageKind::Mkl)?;
                let selection = select_kernels_on(&stage.bank, &stage.data, &params)?;
                let model = self.train_model(
                    StageKind::Mkl,
                    method,
                    &selection.indices,
                    choice.c,
                    two,
                    Some(selection.trace.clone()),
                )?;
                Ok(Fit {
                    model,
                    choice,
                    selection: Some(selection),
                })
            }
        }
    }

    /// One-vs-all MKL on a subset of the normalized bank.
    pub fn train_mkl_subset(&mut self, method: Method, indices: &[usize], c: T, p: T) -> Result<MulticlassModel<T>> {
        self.train_model(StageKind::Mkl, method, indices, c, p, None)
    }

    fn train_model(
        &mut self,
        kind: StageKind,
        method: Method,
        indices: &[usize],
        c: T,
        p: T,
        selection: Option<crate::heuristic::SelectionTrace>,
    ) -> Result<MulticlassModel<T>> {
        let settings = self.settings;
        let train = self.train;
        let stage = self.stage(kind)?;
        let bank = &stage.bank;
        if indices.is_empty() {
            return Err(Error::Invalid("no kernels to train on".into()));
        }
        let specs: Vec<KernelSpec<T>> = indices.iter().map(|&m| *bank.spec(m)).collect();
        let grams: Vec<&GramMatrix<T>> = indices.iter().map(|&m| bank.gram(m)).collect();
        let models = train_one_vs_all(
            &specs,
            &grams,
            train.labels(),
            train.n_classes(),
            &settings.mkl_params(c, p),
        )?;
        Ok(MulticlassModel {
            method,
            class_names: train.class_names().to_vec(),
            scales: indices.iter().map(|&m| bank.scales()[m]).collect(),
            specs,
            train_views: bank.train_views().to_vec(),
            concat: kind == StageKind::Concat,
            c,
            p,
            models,
            selection,
        })
    }
}

fn choose_all<T: Scalar>(stage: &mut Stage<T>, settings: &PipelineSettings<T>, p: T) -> Result<CvChoice<T>> {
    if let Some((_, c)) = stage.choices.iter().find(|(q, _)| *q == p) {
        return Ok(c.clone());
    }
    let all: Vec<usize> = (0..stage.bank.len()).collect();
    let mut best: Option<(T, f64)> = None;
    let mut grid = Vec::new();
    for c in settings.sorted_c_grid() {
        let ev = CvEvaluator::new(&stage.data, settings.mkl_params(c, p));
        let acc = ev.evaluate(&all)?;
        grid.push(GridPoint {
            c: c.as_f64(),
            kernel: None,
            accuracy: acc,
        });
        if best.is_none_or(|(_, b)| acc > b) {
            best = Some((c, acc));
        }
    }
    let (c, cv_accuracy) = best.expect("validated non-empty grid");
    let choice = CvChoice {
        c,
        kernel: None,
        cv_accuracy,
        grid,
    };
    stage.choices.push((p, choice.clone()));
    Ok(choice)
}

fn choose_single<T: Scalar>(
    stage: &mut Stage<T>,
    cands: &[usize],
    settings: &PipelineSettings<T>,
    method: Method,
) -> Result<CvChoice<T>> {
    if cands.is_empty() {
        return Err(Error::Invalid(format!("{method}: no kernel is available")));
    }
    let sets: Vec<Vec<usize>> = cands.iter().map(|&m| vec![m]).collect();
    let mut best: Option<(T, usize, f64)> = None;
    let mut grid = Vec::new();
    for c in settings.sorted_c_grid() {
        let ev = CvEvaluator::new(&stage.data, settings.mkl_params(c, T::one()));
        let scores = ev.evaluate_many(&sets)?;
        for (&m, &acc) in cands.iter().zip(&scores) {
            grid.push(GridPoint {
                c: c.as_f64(),
                kernel: Some(stage.bank.spec(m).to_string()),
                accuracy: acc,
            });
            if best.is_none_or(|(_, _, b)| acc > b) {
                best = Some((c, m, acc));
            }
        }
    }
    let (c, m, cv_accuracy) = best.expect("non-empty grid and candidates");
    Ok(CvChoice {
        c,
        kernel: Some(*stage.bank.spec(m)),
        cv_accuracy,
        grid,
    })
}

/// One global C (and kernel, for single-kernel baselines) maximizing CV
/// accuracy on `train`; ties go to the smaller C, then the lower kernel.
pub fn select_hyperparameters<T: Scalar>(
    train: &FeatureTable<T>,
    method: Method,
    settings: &PipelineSettings<T>,
    folds: FoldAssignment,
) -> Result<CvChoice<T>> {
    Workspace::with_folds(train, settings, folds)?.choose(method)
}

/// Fits `method` on the training side of `split`. Features are
/// L2-normalized per sample and CV folds are seeded with `split.seed`, as in
/// the benchmark.
pub fn fit_split<T: Scalar>(
    table: &FeatureTable<T>,
    split: &SplitManifest,
    method: Method,
    settings: &PipelineSettings<T>,
) -> Result<Fit<T>> {
    let train = table.l2_normalized().subset(&split.train_indices)?;
    Workspace::new(&train, settings, split.seed)?.fit(method)
}
