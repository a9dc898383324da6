mod support;

use cpgraph::gnn::{
    count_cp_params, forward, predict, train_with_inputs, CpGcnModel, GraphInputs, TrainConfig, NUM_CLASSES,
};
use cpgraph::Label;
use support::*;

#[test]
fn forward_matches_dense_oracle() {
    for seed in 0..20 {
        for use_cp in [false, true] {
            let inst = random_instance(seed, 15, use_cp);
            let inputs = GraphInputs::new(&inst.graph);
            let got = forward(&inst.model, &inputs, inst.tokens.as_ref()).unwrap().log_probs;
            let want = dense_forward(&inst.model, &inst.graph, inst.tokens.as_ref());
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "seed {seed}: {a} vs {b}");
            }
            for row in got.rows() {
                assert!((row.mapv(f64::exp).sum() - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 20 {
        seed += 1;
        let arms = [random_instance(seed, 12, false), random_instance(seed, 12, true)];
        if arms.iter().any(|inst| min_kink_distance(inst) < 1e-3) {
            continue;
        }
        for inst in &arms {
            let (err, at) = max_gradient_error(inst, 1e-5, 1e-6);
            assert!(err < 1e-5, "seed {seed}: rel err {err:e} at {at}");
        }
        checked += 1;
    }
}

#[test]
fn zero_token_table_equals_baseline() {
    let inst = random_instance(3, 20, true);
    let inputs = GraphInputs::new(&inst.graph);
    let mut cp = inst.model.clone();
    cp.token_table.as_mut().unwrap().fill(0.0);
    let base = CpGcnModel { token_table: None, ..cp.clone() };
    let a = forward(&cp, &inputs, inst.tokens.as_ref()).unwrap().log_probs;
    let b = forward(&base, &inputs, None).unwrap().log_probs;
    assert_eq!(a, b);
}

#[test]
fn parameter_delta_is_token_table() {
    for d in [1, 8, 16, 64] {
        let cp = CpGcnModel::zeros(7, d, NUM_CLASSES, true);
        let base = CpGcnModel::zeros(7, d, NUM_CLASSES, false);
        assert_eq!(cp.num_params() - base.num_params(), count_cp_params(NUM_CLASSES, d));
        assert_eq!(count_cp_params(NUM_CLASSES, d), (NUM_CLASSES + 1) * d);
    }
}

fn trained(seed: u64) -> (Instance, CpGcnModel, GraphInputs) {
    let inst = random_instance(seed, 40, true);
    let inputs = GraphInputs::new(&inst.graph);
    let cfg = TrainConfig { epochs: 30, learning_rate: 0.3, seed, use_cp: true, ..Default::default() };
    let model = train_with_inputs(&inputs, &inst.labels, &inst.split, &cfg).unwrap().model;
    (inst, model, inputs)
}

#[test]
fn test_labels_never_reach_predictions() {
    for seed in 0..10 {
        let (inst, model, inputs) = trained(seed);
        let base = predict(&model, &inputs, &inst.labels, &inst.split).unwrap();
        for &i in &inst.split.test {
            let mut y = inst.labels.clone();
            y.set(i, y.get(i).complement());
            assert_eq!(predict(&model, &inputs, &y, &inst.split).unwrap(), base);
            y.set(i, Label::Unknown);
            assert_eq!(predict(&model, &inputs, &y, &inst.split).unwrap(), base);
        }
    }
}

#[test]
fn train_labels_do_reach_predictions() {
    let (inst, model, inputs) = trained(5);
    let base = predict(&model, &inputs, &inst.labels, &inst.split).unwrap();
    let i = inst.split.train[0];
    let mut y = inst.labels.clone();
    y.set(i, y.get(i).complement());
    assert_ne!(predict(&model, &inputs, &y, &inst.split).unwrap(), base);
}
