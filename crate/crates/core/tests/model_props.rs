use kisan_core::baselines::{fit_baseline, BaselineKind, Hyperparams};
use kisan_core::domain::{LabeledDataset, Schema};
use kisan_core::forest::{feature_importances, fit_random_forest, oob_accuracy, ForestConfig};
use kisan_core::metrics::{classification_metrics, log_loss, ConfusionMatrix};
use kisan_core::synth::synth_crop_dataset;
use kisan_core::tree::{best_split, fit_decision_tree, gini_impurity, TreeConfig, TreeNode};
use kisan_core::Classifier;
use proptest::prelude::*;

fn labeled(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> LabeledDataset {
    let arity = rows[0].len();
    let schema = Schema::new("prop", (0..arity).map(|j| format!("x{j}")).collect());
    let names: Vec<String> = labels.iter().map(|l| format!("c{l}")).collect();
    LabeledDataset::from_labels(schema, rows, &names).unwrap()
}

fn data_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (5usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), n),
            prop::collection::vec(0usize..3, n),
        )
    })
}

fn all_splits_positive(node: &TreeNode) -> bool {
    match node {
        TreeNode::Leaf { .. } => true,
        TreeNode::Split {
            decrease, left, right, ..
        } => *decrease > 0.0 && all_splits_positive(left) && all_splits_positive(right),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gini_is_bounded(counts in prop::collection::vec(0usize..50, 1..8)) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let g = gini_impurity(&counts).unwrap();
        let k = counts.len() as f64;
        prop_assert!(g >= -1e-15 && g <= 1.0 - 1.0 / k + 1e-12);
    }

    #[test]
    fn accepted_splits_strictly_decrease_impurity((rows, labels) in data_strategy()) {
        if let Some(split) = best_split(&rows, &labels, &[0, 1, 2]) {
            prop_assert!(split.impurity_decrease > 0.0);
        }
        let ds = labeled(rows, labels);
        let tree = fit_decision_tree(&ds, &TreeConfig::default()).unwrap();
        prop_assert!(all_splits_positive(&tree.root));
    }

    #[test]
    fn unlimited_tree_memorizes_rows_in_general_position(
        xs in prop::collection::btree_set(-1000i32..1000, 3..40),
        ys in prop::collection::vec(-5.0..5.0f64, 40),
        labels in prop::collection::vec(0usize..3, 40),
    ) {
        // Distinct first coordinates let every mixed node peel off an
        // extreme row, which is always a strictly positive split.
        let rows: Vec<Vec<f64>> = xs.iter().zip(&ys).map(|(&x, &y)| vec![x as f64, y]).collect();
        let labels = labels[..rows.len()].to_vec();
        let ds = labeled(rows, labels);
        let tree = fit_decision_tree(&ds, &TreeConfig::default()).unwrap();
        for (r, &l) in ds.rows.iter().zip(&ds.labels) {
            prop_assert_eq!(tree.predict_class(r).unwrap(), l);
        }
    }

    #[test]
    fn posteriors_are_distributions((rows, labels) in data_strategy(), probe in prop::collection::vec(-12.0..12.0f64, 3)) {
        let ds = labeled(rows, labels);
        prop_assume!(ds.n_classes() >= 2);
        let forest = fit_random_forest(&ds, &ForestConfig { n_trees: 7, ..ForestConfig::default() }).unwrap();
        let p = forest.predict_proba(&probe).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        let params = Hyperparams { logistic_epochs: 30, gbt_stages: 4, svm_epochs: 30, ..Hyperparams::default() };
        for kind in BaselineKind::ALL {
            let model = fit_baseline(kind, &ds, &params).unwrap();
            let p = model.predict_proba(&probe).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9, "{}", kind);
            prop_assert!(p.iter().all(|v| *v >= 0.0), "{}", kind);
        }
    }

    #[test]
    fn importances_are_a_distribution((rows, labels) in data_strategy()) {
        let ds = labeled(rows, labels);
        let forest = fit_random_forest(&ds, &ForestConfig { n_trees: 5, ..ForestConfig::default() }).unwrap();
        let imp = feature_importances(&forest);
        prop_assert_eq!(imp.len(), 3);
        prop_assert!(imp.iter().all(|v| *v >= 0.0));
        prop_assert!((imp.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn forest_fit_is_deterministic((rows, labels) in data_strategy(), seed in 0u64..1000) {
        let ds = labeled(rows, labels);
        let config = ForestConfig { n_trees: 6, seed, ..ForestConfig::default() };
        prop_assert_eq!(fit_random_forest(&ds, &config).unwrap(), fit_random_forest(&ds, &config).unwrap());
    }

    #[test]
    fn metric_identities(counts in prop::collection::vec(prop::collection::vec(0u64..20, 3), 3)) {
        let total: u64 = counts.iter().flatten().sum();
        prop_assume!(total > 0);
        let catalog: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let cm = ConfusionMatrix { class_catalog: catalog, counts };
        let m = classification_metrics(&cm).unwrap();
        prop_assert_eq!(m.accuracy, cm.trace() as f64 / total as f64);
        let f1s: Vec<f64> = m.per_class.iter().map(|c| c.f1).collect();
        let lo = f1s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(m.f1_macro >= lo - 1e-12 && m.f1_macro <= hi + 1e-12);
        for c in &m.per_class {
            for v in [c.precision, c.recall, c.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn log_loss_is_non_negative(
        raw in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 4), 1..20),
        truth_seed in any::<u64>(),
    ) {
        let catalog: Vec<String> = (0..4).map(|i| format!("k{i}")).collect();
        let posteriors: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum::<f64>() + 1e-9;
                let mut p: Vec<f64> = r.iter().map(|v| (v + 1e-9 / 4.0) / s).collect();
                let t: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= t);
                p
            })
            .collect();
        let truth: Vec<usize> = (0..posteriors.len()).map(|i| ((truth_seed >> (2 * (i % 30))) & 3) as usize).collect();
        prop_assert!(log_loss(&truth, &posteriors, &catalog).unwrap() >= 0.0);
    }
}

#[test]
fn oob_accuracy_does_not_exceed_training_accuracy() {
    let ds = synth_crop_dataset(3, 30, true).unwrap();
    let forest = fit_random_forest(
        &ds,
        &ForestConfig {
            n_trees: 60,
            ..ForestConfig::default()
        },
    )
    .unwrap();
    let oob = oob_accuracy(&forest, &ds).unwrap();
    let hits = ds
        .rows
        .iter()
        .zip(&ds.labels)
        .filter(|(r, &l)| forest.predict_class(r).unwrap() == l)
        .count();
    assert!(oob.accuracy <= hits as f64 / ds.len() as f64);
}
