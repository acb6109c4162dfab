use hmkl::dataio::FeatureTable;
use hmkl::kernels::{build_bank, cross_gram, gram_matrix, normalize_by_hilbert_std, HilbertScale, KernelFamily};
use ndarray::Array2;
use proptest::prelude::*;

fn table(values: Vec<f64>, n: usize, d: usize) -> FeatureTable<f64> {
    let view = Array2::from_shape_vec((n, d), values).unwrap();
    FeatureTable::new(
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..n).map(|i| i % 2).collect(),
        vec!["a".into(), "b".into()],
        vec![view.clone(), view.mapv(|v| v * 0.5)],
        vec!["x".into(), "y".into()],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bank_grams_are_symmetric_finite_with_unit_diagonals(
        values in proptest::collection::vec(0.0f64..3.0, 4 * 3..=10 * 3),
    ) {
        let n = values.len() / 3;
        let t = table(values[..n * 3].to_vec(), n, 3);
        let bank = build_bank(&t, &[10.0, 1.0, 0.1, 0.01], &[3.0, 2.0, 1.0, 0.5]).unwrap();
        prop_assert_eq!(bank.len(), 18);
        let mut seen = Vec::new();
        for (spec, g) in bank.specs().iter().zip(bank.grams()) {
            prop_assert_eq!(spec.gamma.is_some(), spec.family != KernelFamily::Linear);
            prop_assert!(!seen.contains(&spec.to_string()));
            seen.push(spec.to_string());
            prop_assert_eq!(g.values().dim(), (n, n));
            prop_assert!(g.values().iter().all(|v| v.is_finite()));
            prop_assert!(g.asymmetry() <= 1e-9);
            if spec.family != KernelFamily::Linear {
                for i in 0..n {
                    prop_assert!((g.values()[[i, i]] - 1.0).abs() <= 1e-12);
                }
            }
            let direct = gram_matrix(spec, t.view(spec.view)).unwrap();
            let cross = cross_gram(spec, t.view(spec.view), t.view(spec.view)).unwrap();
            prop_assert_eq!(direct.values(), g.values());
            for (a, b) in cross.values().iter().zip(g.values()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn normalization_keeps_invariants(
        values in proptest::collection::vec(0.0f64..3.0, 5 * 2..=9 * 2),
    ) {
        let n = values.len() / 2;
        let t = table(values[..n * 2].to_vec(), n, 2);
        let Ok(bank) = normalize_by_hilbert_std(build_bank(&t, &[1.0], &[1.0]).unwrap(), HilbertScale::Variance) else {
            // Near-constant draws are rejected as degenerate.
            return Ok(());
        };
        for (m, g) in bank.grams().iter().enumerate() {
            prop_assert!(g.asymmetry() <= 1e-9);
            prop_assert!(bank.scales()[m] > 0.0);
        }
    }
}
