use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{stratified_split, FeatureTable};
use crate::error::{Error, Result};
use crate::heuristic::SelectionTrace;
use crate::kernels::{zien_ong_weights, GramMatrix};
use crate::scalar::Scalar;

use super::fit::{CvChoice, Workspace};
use super::metrics::{accuracy, confusion_matrix, mean_and_std};
use super::model::predict_multiclass;
use super::{Method, PipelineSettings};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkPlan<T> {
    pub methods: Vec<Method>,
    pub fractions: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub settings: PipelineSettings<T>,
    /// Record test accuracy after each accepted selection step.
    pub curves: bool,
    /// Record Zien–Ong normalized kernel weights per class.
    pub weights: bool,
}

impl<T: Scalar> BenchmarkPlan<T> {
    pub fn new(methods: Vec<Method>, fractions: Vec<f64>, repetitions: usize, base_seed: u64) -> Self {
        Self {
            methods,
            fractions,
            repetitions,
            base_seed,
            settings: PipelineSettings::default(),
            curves: true,
            weights: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Invalid("no methods to benchmark".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Invalid("repetitions must be at least 1".into()));
        }
        if let Some(f) = self.fractions.iter().find(|&&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::Invalid(format!("train fraction {f} is outside (0, 1)")));
        }
        if self.fractions.is_empty() {
            return Err(Error::Invalid("no train fractions given".into()));
        }
        self.settings.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub class: String,
    pub kernels: Vec<String>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub method: String,
    pub fraction: f64,
    pub repetition: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub c: f64,
    pub cv_accuracy: f64,
    pub kernels: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    /// Heuristic only: test accuracy of `S` after step 1 and after each
    /// accepted pass.
    pub curve: Option<Vec<f64>>,
    pub weights: Option<Vec<ClassWeights>>,
    pub selection: Option<SelectionTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub method: String,
    pub fraction: f64,
    pub repetition: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: String,
    pub fraction: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub accuracies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEcho {
    pub methods: Vec<String>,
    pub fractions: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub settings: PipelineSettings<f64>,
    pub dataset_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    pub config: PlanEcho,
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RepetitionResult>,
    pub failures: Vec<FailureRecord>,
}

impl BenchmarkReport {
    pub fn cell(&self, method: &str, fraction: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.method == method && c.fraction == fraction)
    }

    pub fn runs_of(&self, method: &str, fraction: f64) -> Vec<&RepetitionResult> {
        self.runs
            .iter()
            .filter(|r| r.method == method && r.fraction == fraction)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Storage for finished repetitions so an interrupted run can resume.
pub trait ResultStore: Sync {
    fn load(&self, key: &str) -> Option<RepetitionResult>;
    fn store(&self, key: &str, result: &RepetitionResult) -> Result<()>;
}

/// In-memory [`ResultStore`].
#[derive(Default)]
pub struct MemoryStore {
    entries: Mutex<BTreeMap<String, RepetitionResult>>,
}

impl MemoryStore {
    pub fn len(&self) -> usize {
        self.entries.lock().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ResultStore for MemoryStore {
    fn load(&self, key: &str) -> Option<RepetitionResult> {
        self.entries.lock().expect("store lock").get(key).cloned()
    }

    fn store(&self, key: &str, result: &RepetitionResult) -> Result<()> {
        self.entries
            .lock()
            .expect("store lock")
            .insert(key.to_string(), result.clone());
        Ok(())
    }
}

fn echo<T: Scalar>(plan: &BenchmarkPlan<T>, dataset_hash: &str) -> PlanEcho {
    let v = |xs: &[T]| xs.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
    let s = &plan.settings;
    PlanEcho {
        methods: plan.methods.iter().map(|m| m.to_string()).collect(),
        fractions: plan.fractions.clone(),
        repetitions: plan.repetitions,
        base_seed: plan.base_seed,
        settings: PipelineSettings {
            rbf_gammas: v(&s.rbf_gammas),
            chi2_gammas: v(&s.chi2_gammas),
            c_grid: v(&s.c_grid),
            cv_folds: s.cv_folds,
            scale: s.scale,
            tol_beta: s.tol_beta.as_f64(),
            max_outer: s.max_outer,
            svm_tol: s.svm_tol.as_f64(),
        },
        dataset_hash: dataset_hash.to_string(),
    }
}

/// Cache key of one (method, fraction, repetition) under a given dataset
/// and settings.
pub fn repetition_key<T: Scalar>(
    plan: &BenchmarkPlan<T>,
    dataset_hash: &str,
    method: Method,
    fraction: f64,
    repetition: usize,
) -> String {
    let mut e = echo(plan, dataset_hash);
    e.methods.clear();
    e.fractions.clear();
    e.repetitions = 0;
    let settings = serde_json::to_string(&e).expect("plan echo serializes");
    let digest = Sha256::digest(format!("{settings}|{}|{}|{}", plan.curves, plan.weights, plan.base_seed));
    let hex: String = digest.iter().take(12).map(|b| format!("{b:02x}")).collect();
    format!("{method}|{fraction}|{repetition}|{hex}")
}

fn run_method<T: Scalar>(
    ws: &mut Workspace<'_, T>,
    test: &FeatureTable<T>,
    method: Method,
    plan: &BenchmarkPlan<T>,
    fraction: f64,
    repetition: usize,
    seed: u64,
) -> Result<RepetitionResult> {
    let fit = ws.fit(method)?;
    let pred = predict_multiclass(&fit.model, test)?;
    let acc = accuracy(test.labels(), &pred)?;
    let confusion = confusion_matrix(test.labels(), &pred, test.n_classes())?;
    let CvChoice { c, cv_accuracy, .. } = fit.choice;

    let curve = match (&fit.selection, plan.curves) {
        (Some(sel), true) => {
            let sets = sel.trace.selected_sets();
            let mut curve = Vec::with_capacity(sets.len());
            for (t, s) in sets.iter().enumerate() {
                let acc_t = if t + 1 == sets.len() {
                    acc
                } else {
                    let m = ws.train_mkl_subset(method, &s.indices, c, T::of(2.0))?;
                    accuracy(test.labels(), &predict_multiclass(&m, test)?)?
                };
                curve.push(acc_t);
            }
            Some(curve)
        }
        _ => None,
    };

    let weights = if plan.weights && method.uses_mkl_bank() {
        let bank = ws.mkl_bank()?;
        let grams: Vec<&GramMatrix<T>> = fit
            .model
            .specs
            .iter()
            .map(|s| bank.gram(bank.index_of(s).expect("model kernel from bank")))
            .collect();
        let mut out = Vec::new();
        for (k, m) in fit.model.models.iter().enumerate() {
            let w = zien_ong_weights(&m.betas, &grams)?;
            out.push(ClassWeights {
                class: fit.model.class_names[k].clone(),
                kernels: fit.model.specs.iter().map(|s| s.to_string()).collect(),
                weights: w.iter().map(|x| x.as_f64()).collect(),
            });
        }
        Some(out)
    } else {
        None
    };

    Ok(RepetitionResult {
        method: method.to_string(),
        fraction,
        repetition,
        seed,
        accuracy: acc,
        c: c.as_f64(),
        cv_accuracy,
        kernels: fit.model.specs.iter().map(|s| s.to_string()).collect(),
        confusion,
        curve,
        weights,
        selection: fit.selection.map(|s| s.trace),
    })
}

type JobOutcome = Vec<std::result::Result<RepetitionResult, FailureRecord>>;

fn run_job<T: Scalar>(
    table: &FeatureTable<T>,
    plan: &BenchmarkPlan<T>,
    fraction: f64,
    r: usize,
    dataset_hash: &str,
    store: Option<&dyn ResultStore>,
) -> JobOutcome {
    let seed = plan.base_seed.wrapping_add(r as u64);
    let fail = |method: Method, e: &Error| FailureRecord {
        method: method.to_string(),
        fraction,
        repetition: r,
        error: e.to_string(),
    };
    let keys: Vec<String> = plan
        .methods
        .iter()
        .map(|&m| repetition_key(plan, dataset_hash, m, fraction, r))
        .collect();
    let cached: Vec<Option<RepetitionResult>> = keys
        .iter()
        .map(|k| store.and_then(|s| s.load(k)))
        .collect();
    if cached.iter().all(Option::is_some) {
        log::info!("fraction {fraction} repetition {r}: restored from cache");
        return cached.into_iter().map(|c| Ok(c.expect("all cached"))).collect();
    }

    let prepared = stratified_split(table, fraction, seed).and_then(|split| {
        Ok((table.subset(&split.train_indices)?, table.subset(&split.test_indices)?))
    });
    let (train, test) = match prepared {
        Ok(t) => t,
        Err(e) => return plan.methods.iter().map(|&m| Err(fail(m, &e))).collect(),
    };
    let mut ws = match Workspace::new(&train, &plan.settings, seed) {
        Ok(ws) => ws,
        Err(e) => return plan.methods.iter().map(|&m| Err(fail(m, &e))).collect(),
    };
    plan.methods
        .iter()
        .zip(keys.iter().zip(cached))
        .map(|(&method, (key, cached))| {
            if let Some(c) = cached {
                return Ok(c);
            }
            match run_method(&mut ws, &test, method, plan, fraction, r, seed) {
                Ok(res) => {
                    log::info!("{method} fraction {fraction} repetition {r}: accuracy {:.4}", res.accuracy);
                    if let Some(s) = store {
                        if let Err(e) = s.store(key, &res) {
                            log::warn!("could not cache {key}: {e}");
                        }
                    }
                    Ok(res)
                }
                Err(e) => {
                    log::warn!("{method} fraction {fraction} repetition {r} failed: {e}");
                    Err(fail(method, &e))
                }
            }
        })
        .collect()
}

/// Repeated random-split evaluation.
///
/// Features are L2-normalized per sample up front. Repetition `r` splits
/// with seed `base_seed + r` and uses the same seed for its CV folds; every
/// method of that repetition sees the same split. Component errors are
/// recorded as failures without stopping the batch.
pub fn run_benchmark<T: Scalar>(
    table: &FeatureTable<T>,
    plan: &BenchmarkPlan<T>,
    store: Option<&dyn ResultStore>,
) -> Result<BenchmarkReport> {
    plan.validate()?;
    let table = table.l2_normalized();
    let dataset_hash = table.content_hash();
    let jobs: Vec<(usize, usize)> = (0..plan.fractions.len())
        .flat_map(|f| (0..plan.repetitions).map(move |r| (f, r)))
        .collect();
    let outcomes: Vec<JobOutcome> = jobs
        .par_iter()
        .map(|&(f, r)| run_job(&table, plan, plan.fractions[f], r, &dataset_hash, store))
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        for o in outcome {
            match o {
                Ok(r) => runs.push(r),
                Err(f) => failures.push(f),
            }
        }
    }
    let mut cells = Vec::new();
    for method in &plan.methods {
        let name = method.to_string();
        for &fraction in &plan.fractions {
            let accuracies: Vec<f64> = runs
                .iter()
                .filter(|r| r.method == name && r.fraction == fraction)
                .map(|r| r.accuracy)
                .collect();
            let (mean, std) = mean_and_std(&accuracies);
            cells.push(CellSummary {
                method: name.clone(),
                fraction,
                mean,
                std,
                count: accuracies.len(),
                accuracies,
            });
        }
    }
    Ok(BenchmarkReport {
        provenance: None,
        config: echo(plan, &dataset_hash),
        cells,
        runs,
        failures,
    })
}
