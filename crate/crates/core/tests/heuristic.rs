use hmkl::dataio::{FeatureTable, FoldAssignment};
use hmkl::heuristic::{select_kernels, SelectionTrace, TerminationReason};
use hmkl::kernels::{build_bank, normalize_by_hilbert_std, HilbertScale, KernelBank, KernelSpec};
use hmkl::mkl::MklParams;
use hmkl::synthetic::{generate, SyntheticSpec};

fn bank_of(table: &FeatureTable<f64>, rbf: &[f64], chi2: &[f64]) -> KernelBank<f64> {
    normalize_by_hilbert_std(build_bank(&table.l2_normalized(), rbf, chi2).unwrap(), HilbertScale::Variance).unwrap()
}

fn params() -> MklParams<f64> {
    MklParams::new(1.0, 2.0)
}

fn check_structure(t: &SelectionTrace, bank: &KernelBank<f64>) {
    for it in &t.iterations {
        let views: Vec<usize> = it.candidates.iter().map(|c| bank.spec(c.indices[0]).view).collect();
        let mut dedup = views.clone();
        dedup.dedup();
        assert_eq!(views, dedup, "at most one candidate per view");
        assert!(it.subsets.len() <= 1 << it.candidates.len());
        let cands: Vec<usize> = it.candidates.iter().map(|c| c.indices[0]).collect();
        assert!(it.best_subset.indices.iter().all(|m| cands.contains(m)));
        for c in &it.candidates {
            assert!(c.score > it.selected.score);
        }
    }
}

#[test]
fn single_view_grows_one_kernel_at_a_time() {
    let spec = SyntheticSpec {
        n_classes: 3,
        samples_per_class: 12,
        dim: 5,
        separations: vec![1.5],
        noise: 1.0,
    };
    let table = generate::<f64>(&spec, 4).unwrap();
    let bank = bank_of(&table, &[10.0, 1.0, 0.1], &[1.0, 0.5]);
    let folds = FoldAssignment::stratified(table.labels(), 5, 1).unwrap();
    let sel = select_kernels(&bank, table.labels(), &folds, &params()).unwrap();
    let t = &sel.trace;
    assert_eq!(t.initial.indices.len(), 1);
    let best_single = t.singles.iter().map(|s| s.score).fold(f64::MIN, f64::max);
    assert_eq!(t.initial.score, best_single);
    for it in &t.iterations {
        assert!(it.candidates.len() <= 1);
        assert!(it.subsets.len() <= 2);
        assert!(it.best_subset.indices.len() <= 1);
    }
    for w in t.selected_sets().windows(2) {
        assert_eq!(w[1].indices.len(), w[0].indices.len() + 1);
        assert!(w[1].score > w[0].score);
    }
    check_structure(t, &bank);
}

#[test]
fn informative_view_kernel_is_kept() {
    let spec = SyntheticSpec::mixed(3, 15, 1, 3, 3.0);
    let table = generate::<f64>(&spec, 8).unwrap();
    let bank = bank_of(&table, &[10.0, 1.0, 0.1, 0.01], &[3.0, 2.0, 1.0, 0.5]);
    let folds = FoldAssignment::stratified(table.labels(), 5, 2).unwrap();
    let sel = select_kernels(&bank, table.labels(), &folds, &params()).unwrap();
    let t = &sel.trace;
    let view0 = bank.kernels_of_view(0);
    let best0 = view0
        .iter()
        .map(|&m| (m, t.singles[m].score))
        .fold(None::<(usize, f64)>, |acc, (m, s)| match acc {
            Some((_, b)) if s <= b => acc,
            _ => Some((m, s)),
        })
        .unwrap();
    assert!(sel.indices.contains(&best0.0));
    assert!(t.selected.score >= best0.1);
    assert!(t.evaluate_calls <= 4 * 9 * 16);
    check_structure(t, &bank);
}

#[test]
fn identical_kernels_stop_after_first_pass() {
    let spec = SyntheticSpec::mixed(2, 10, 1, 0, 6.0);
    let base = generate::<f64>(&spec, 1).unwrap();
    let v = base.view(0).clone();
    let table = FeatureTable::new(
        base.sample_ids().to_vec(),
        base.labels().to_vec(),
        base.class_names().to_vec(),
        vec![v.clone(), v],
        vec!["a".into(), "b".into()],
    )
    .unwrap();
    let specs = vec![KernelSpec::linear(0), KernelSpec::linear(0), KernelSpec::linear(1), KernelSpec::linear(1)];
    let bank = KernelBank::with_specs(&table.l2_normalized(), specs).unwrap();
    let folds = FoldAssignment::stratified(table.labels(), 5, 0).unwrap();
    let sel = select_kernels(&bank, table.labels(), &folds, &params()).unwrap();
    assert_eq!(sel.indices, vec![0, 2]);
    assert_eq!(sel.trace.iterations.len(), 1);
    assert_eq!(sel.trace.terminated_reason, TerminationReason::EmptyCandidates);
}

#[test]
fn every_kernel_selected_terminates() {
    let spec = SyntheticSpec::mixed(2, 8, 2, 0, 3.0);
    let table = generate::<f64>(&spec, 2).unwrap();
    let bank = KernelBank::with_specs(&table.l2_normalized(), vec![KernelSpec::linear(0), KernelSpec::linear(1)]).unwrap();
    let folds = FoldAssignment::stratified(table.labels(), 4, 0).unwrap();
    let sel = select_kernels(&bank, table.labels(), &folds, &params()).unwrap();
    assert_eq!(sel.indices, vec![0, 1]);
    assert_eq!(sel.trace.terminated_reason, TerminationReason::AllSelected);
    assert!(sel.trace.iterations.is_empty());
}

#[test]
fn trace_serializes_and_replays() {
    let table = generate::<f64>(&SyntheticSpec::mixed(3, 10, 1, 1, 2.0), 5).unwrap();
    let bank = bank_of(&table, &[1.0, 0.1], &[1.0]);
    let folds = FoldAssignment::stratified(table.labels(), 5, 4).unwrap();
    let a = select_kernels(&bank, table.labels(), &folds, &params()).unwrap();
    let b = select_kernels(&bank, table.labels(), &folds, &params()).unwrap();
    let json = a.trace.to_json().unwrap();
    assert_eq!(json, b.trace.to_json().unwrap());
    let back: SelectionTrace = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a.trace);
    assert!(json.contains("\"terminated_reason\""));
    assert!(json.contains("\"selected\""));
}

#[test]
fn bad_inputs() {
    let table = generate::<f64>(&SyntheticSpec::mixed(2, 6, 1, 0, 2.0), 5).unwrap();
    let bank = bank_of(&table, &[1.0], &[]);
    let folds = FoldAssignment::stratified(table.labels(), 3, 4).unwrap();
    assert!(select_kernels(&bank, &table.labels()[1..], &folds, &params()).is_err());
    let empty = KernelBank::with_specs(&table, vec![]).unwrap();
    assert!(select_kernels(&empty, table.labels(), &folds, &params()).is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn selection_invariants(seed in 0u64..1000, sep in 0.5f64..4.0) {
            let table = generate::<f64>(&SyntheticSpec::mixed(3, 8, 2, 1, sep), seed).unwrap();
            let bank = bank_of(&table, &[1.0, 0.1], &[1.0]);
            let folds = FoldAssignment::stratified(table.labels(), 3, seed).unwrap();
            let sel = select_kernels(&bank, table.labels(), &folds, &params()).unwrap();
            let t = &sel.trace;
            let sets = t.selected_sets();
            for w in sets.windows(2) {
                prop_assert!(w[1].indices.len() > w[0].indices.len());
                prop_assert!(w[0].indices.iter().all(|m| w[1].indices.contains(m)));
            }
            prop_assert_eq!(&sets.last().unwrap().indices, &sel.indices);
            let (f, m) = (3usize, 4usize);
            prop_assert!(t.evaluate_calls <= f * m * (1 << f));
            prop_assert!(t.classifier_train_count <= f * m * (1 << f) * 3 * 3);
            check_structure(t, &bank);
        }
    }
}
