mod common;

use rand::Rng;
use stackga_core::data::SplitKind;
use stackga_core::learners::{ClassifierSpec, Family, Predictor};
use stackga_core::stacking::{build_meta, fit_stack, predict_stack, MetaMode, StackSpec, StackedModel};
use stackga_core::{evaluate, rng, SplitPlan, TrainedModel};

fn roster(t: usize) -> Vec<ClassifierSpec> {
    let all = [
        ClassifierSpec::new(Family::NaiveBayes),
        ClassifierSpec::new(Family::Knn),
        ClassifierSpec::new(Family::Cart),
        ClassifierSpec::new(Family::LogisticRegression).with_param("epochs", 200),
        ClassifierSpec::new(Family::Knn).with_param("k", 9),
    ];
    all[..t].to_vec()
}

#[test]
fn meta_dataset_is_m_by_t() {
    for (m, t, mode) in [
        (30, 1, MetaMode::Resubstitution),
        (41, 3, MetaMode::OutOfFold(2)),
        (57, 5, MetaMode::OutOfFold(5)),
        (64, 4, MetaMode::Resubstitution),
    ] {
        let ds = common::two_informative(3, m, m as u64);
        let spec = StackSpec::new(roster(t), ClassifierSpec::new(Family::LogisticRegression), mode).unwrap();
        let (models, meta) = build_meta(&spec, &ds).unwrap();
        assert_eq!((meta.m(), meta.t(), models.len()), (m, t, t));
        assert_eq!(fit_stack(&spec, &ds).unwrap().meta_model.n_in(), t);
    }
}

#[test]
fn prediction_composes_base_scores() {
    let ds = common::two_informative(4, 80, 2);
    let spec = StackSpec::new(roster(4), ClassifierSpec::new(Family::LogisticRegression), MetaMode::OutOfFold(3)).unwrap();
    let model = fit_stack(&spec, &ds).unwrap();
    let mut r = rng::stream(3, &[]);
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| r.gen_range(-2.0..2.0)).collect();
        let z: Vec<f64> = model.first_level.iter().map(|h| h.score(&x).unwrap()).collect();
        let (label, score) = predict_stack(&model, &x).unwrap();
        assert_eq!(score, model.meta_model.score(&z).unwrap());
        assert_eq!(label, model.meta_model.predict(&z).unwrap());
    }
}

#[test]
fn projection_meta_learner_passes_the_first_score_through() {
    let ds = common::two_informative(3, 50, 4);
    let spec = StackSpec::new(roster(3), ClassifierSpec::new(Family::LogisticRegression), MetaMode::Resubstitution).unwrap();
    let fitted = fit_stack(&spec, &ds).unwrap();
    // sigmoid(40 (z0 - 0.5)) >= 0.5 exactly when z0 >= 0.5
    let model = StackedModel {
        meta_model: TrainedModel::logistic_from_weights(vec![40.0, 0.0, 0.0], -20.0),
        ..fitted
    };
    for row in ds.rows() {
        let base = model.first_level[0].predict(row).unwrap();
        assert_eq!(predict_stack(&model, row).unwrap().0, base);
    }
}

fn column_accuracy(col: &[f64], y: &[u8]) -> f64 {
    col.iter().zip(y).filter(|(z, &l)| u8::from(**z >= 0.5) == l).count() as f64 / y.len() as f64
}

#[test]
fn resubstitution_leaks_and_out_of_fold_does_not() {
    let one_nn = vec![ClassifierSpec::new(Family::Knn).with_param("k", 1)];
    for seed in 0..5u64 {
        let ds = common::random_labels(4, 100, seed);
        let meta = |mode| {
            let spec = StackSpec::new(one_nn.clone(), ClassifierSpec::new(Family::LogisticRegression), mode).unwrap();
            build_meta(&spec, &ds).unwrap().1
        };
        let resub = column_accuracy(&meta(MetaMode::Resubstitution).data.column(0), ds.labels());
        let oof = column_accuracy(&meta(MetaMode::OutOfFold(5)).data.column(0), ds.labels());
        assert_eq!(resub, 1.0);
        assert!(resub >= oof);
        assert!((oof - 0.5).abs() < 0.2, "seed {seed}: out-of-fold accuracy {oof}");
    }
}

#[test]
fn perfect_base_learners_give_a_perfect_stack() {
    let ds = common::two_informative(2, 60, 6);
    let spec = StackSpec::new(
        vec![ClassifierSpec::new(Family::Knn).with_param("k", 1), ClassifierSpec::new(Family::Cart).with_param("min_samples_leaf", 1)],
        ClassifierSpec::new(Family::LogisticRegression),
        MetaMode::Resubstitution,
    )
    .unwrap();
    let model = fit_stack(&spec, &ds).unwrap();
    for (i, row) in ds.rows().enumerate() {
        assert_eq!(predict_stack(&model, row).unwrap().0, ds.label(i));
    }
}

#[test]
fn single_learner_stack_tracks_its_base_on_heart() {
    let ds = common::heart();
    let plan = SplitPlan::new(SplitKind::holdout(0.8), 5);
    let base = ClassifierSpec::new(Family::NaiveBayes);
    let spec = StackSpec::new(vec![base.clone()], ClassifierSpec::new(Family::LogisticRegression), MetaMode::OutOfFold(5)).unwrap();
    let base_acc = evaluate(&base, &ds, &plan).unwrap().report.accuracy.unwrap();
    let stack_acc = evaluate(&spec, &ds, &plan).unwrap().report.accuracy.unwrap();
    assert!(stack_acc >= base_acc - 0.02, "stack {stack_acc} base {base_acc}");

    // with one input and a positive weight the meta score is monotone in the base score
    let model = fit_stack(&spec, &ds).unwrap();
    let w = model.meta_model.linear_coefficients().unwrap().weights[0];
    assert!(w > 0.0);
}

#[test]
fn stacks_are_deterministic() {
    let ds = common::two_informative(3, 50, 8);
    let spec = StackSpec::new(roster(5), ClassifierSpec::new(Family::LogisticRegression), MetaMode::OutOfFold(4)).unwrap();
    let a = fit_stack(&spec, &ds).unwrap();
    let b = fit_stack(&spec, &ds).unwrap();
    for row in ds.rows() {
        assert_eq!(a.score(row).unwrap().to_bits(), b.score(row).unwrap().to_bits());
    }
}

#[test]
fn stacked_ga_history_never_drops_with_elitism() {
    use stackga_core::stacking::stacked_ga;
    use stackga_core::GAConfig;
    for seed in 0..3u64 {
        let ds = common::two_informative(5, 60, 20 + seed);
        let spec = StackSpec::new(roster(3), ClassifierSpec::new(Family::LogisticRegression), MetaMode::OutOfFold(3)).unwrap();
        let cfg = GAConfig { population_size: 8, generations: 6, fitness_folds: 3, elitism: 1, seed, ..Default::default() };
        let (result, model) = stacked_ga(&spec, &cfg, &ds).unwrap();
        assert!(result.history.windows(2).all(|w| w[1].0 >= w[0].0), "seed {seed}: {:?}", result.history);
        assert_eq!(result.history.last().unwrap().0, result.best_fitness);
        assert_eq!(model.mask, result.best_mask);
    }
}
