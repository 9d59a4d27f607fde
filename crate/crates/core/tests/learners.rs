mod common;

use rand::seq::SliceRandom;
use stackga_core::data::SplitKind;
use stackga_core::learners::{ClassifierSpec, Family, Predictor};
use stackga_core::{evaluate, rng, Dataset, SplitPlan};

fn probes(ds: &Dataset) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = ds.rows().map(<[f64]>::to_vec).collect();
    rows.extend(ds.rows().map(|r| r.iter().map(|v| v * 0.7 + 0.1).collect()));
    rows
}

fn light(f: Family) -> ClassifierSpec {
    let spec = ClassifierSpec::new(f).with_seed(3);
    match f {
        Family::Mlp => spec.with_param("epochs", 300),
        Family::RandomForest => spec.with_param("n_trees", 20),
        _ => spec,
    }
}

#[test]
fn label_is_thresholded_score_for_every_family() {
    let ds = common::two_informative(4, 60, 1);
    for f in Family::ALL {
        let model = light(f).fit(&ds).unwrap();
        for row in probes(&ds) {
            let s = model.score(&row).unwrap();
            assert!((0.0..=1.0).contains(&s), "{f}: score {s}");
            assert_eq!(model.predict(&row).unwrap(), u8::from(s >= 0.5), "{f}");
        }
    }
}

#[test]
fn fitting_is_deterministic() {
    let ds = common::two_informative(5, 50, 2);
    for f in Family::ALL {
        let a = light(f).fit(&ds).unwrap();
        let b = light(f).fit(&ds).unwrap();
        for row in probes(&ds) {
            assert_eq!(a.score(&row).unwrap().to_bits(), b.score(&row).unwrap().to_bits(), "{f}");
        }
    }
}

#[test]
fn deterministic_families_ignore_record_order() {
    let ds = common::two_informative(4, 70, 4);
    let mut order: Vec<usize> = (0..ds.m()).collect();
    order.shuffle(&mut rng::stream(9, &[]));
    let shuffled = ds.subset(&order).unwrap();
    for f in [Family::Knn, Family::NaiveBayes, Family::Cart] {
        let a = light(f).fit(&ds).unwrap();
        let b = light(f).fit(&shuffled).unwrap();
        for row in probes(&ds) {
            assert_eq!(a.predict(&row).unwrap(), b.predict(&row).unwrap(), "{f}");
        }
    }
}

#[test]
fn one_nearest_neighbour_recovers_training_labels() {
    let ds = common::two_informative(3, 40, 5);
    let model = ClassifierSpec::new(Family::Knn).with_param("k", 1).fit(&ds).unwrap();
    for (i, row) in ds.rows().enumerate() {
        assert_eq!(model.predict(row).unwrap(), ds.label(i));
    }
}

#[test]
fn leave_one_out_on_duplicated_records() {
    // every record appears twice with the same label
    let base = common::random_labels(3, 20, 6);
    let idx: Vec<usize> = (0..base.m()).flat_map(|i| [i, i]).collect();
    let ds = base.subset(&idx).unwrap();
    let plan = SplitPlan::new(SplitKind::Kfold { k: ds.m(), stratified: false }, 0);
    let knn = ClassifierSpec::new(Family::Knn).with_param("k", 1);
    let e = evaluate(&knn, &ds, &plan).unwrap();
    assert_eq!(e.report.accuracy, Some(1.0));
}

#[test]
fn naive_bayes_on_one_class_predicts_it() {
    let ds = Dataset::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![0.5, 0.5]], vec![0, 0, 0], None).unwrap();
    let model = ClassifierSpec::new(Family::NaiveBayes).fit(&ds).unwrap();
    for row in [[9.0, -3.0], [0.0, 0.0], [1.0, 2.0]] {
        assert_eq!(model.predict(&row).unwrap(), 0);
    }
}

#[test]
fn forest_is_not_worse_than_a_single_tree_on_heart() {
    let ds = common::heart();
    let (mut rf, mut cart) = (0.0, 0.0);
    for seed in 0..30u64 {
        let plan = SplitPlan::new(SplitKind::holdout(0.8), seed);
        let forest = ClassifierSpec::new(Family::RandomForest).with_seed(seed);
        rf += evaluate(&forest, &ds, &plan).unwrap().report.accuracy.unwrap();
        cart += evaluate(&ClassifierSpec::new(Family::Cart), &ds, &plan).unwrap().report.accuracy.unwrap();
    }
    assert!(rf / 30.0 >= cart / 30.0 - 0.02, "rf {} cart {}", rf / 30.0, cart / 30.0);
}

#[test]
fn holdout_reports_are_reproducible() {
    let ds = common::heart();
    let plan = SplitPlan::new(SplitKind::holdout(0.8), 17);
    for f in Family::ALL {
        let a = evaluate(&light(f), &ds, &plan).unwrap();
        let b = evaluate(&light(f), &ds, &plan).unwrap();
        assert_eq!(a, b, "{f}");
    }
}
