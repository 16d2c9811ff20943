use tartan::explorer::{
    baseline_accuracy, evaluate_accuracy, ideal_speedup_table, is_locally_minimal, load_evalset, load_weights,
    search_profile, sweep_oracle, AccuracyTarget, EvalSet, FracRule, QuantizedModel, WeightSet,
};
use tartan::netmodel::{fixture_dir, fixture_network, LayerPrecision, NetworkSpec};

fn load(name: &str) -> (NetworkSpec, WeightSet, EvalSet) {
    let net = fixture_network(name).unwrap();
    let digits = fixture_dir().join("digits");
    let w = load_weights(digits.join(format!("{name}.weights")), &net).unwrap();
    let e = load_evalset(digits.join("eval.set")).unwrap();
    (net, w, e)
}

fn bits(p: &tartan::netmodel::PrecisionProfile) -> Vec<u8> {
    p.precisions().map(|p| p.pa).collect()
}

#[test]
fn search_matches_the_sweep_and_is_locally_minimal() {
    for name in ["mlp", "cnn"] {
        let (net, w, e) = load(name);
        let model = QuantizedModel::new(&net, &w, &e).unwrap();
        let base = baseline_accuracy(&model, &e).unwrap();
        let mut previous: Option<Vec<u8>> = None;
        for thr in [1.0, 0.99] {
            let target = AccuracyTarget::new(base.fraction(), thr).unwrap();
            let out = search_profile(&model, &e, &target).unwrap();
            assert!(target.met_by(out.accuracy));
            assert_eq!(evaluate_accuracy(&model, &out.profile, &e).unwrap(), out.accuracy);
            let oracle = sweep_oracle(&model, &e, &target, &out.profile).unwrap();
            assert_eq!(bits(&oracle), bits(&out.profile), "{name} at {thr}");
            assert!(is_locally_minimal(&model, &e, &target, &out.profile).unwrap());
            let b = bits(&out.profile);
            assert!(b.iter().any(|&p| p < 16), "{name} at {thr}: {b:?}");
            if let Some(prev) = &previous {
                assert!(b.iter().zip(prev).all(|(x, y)| x <= y), "{name}: {b:?} vs {prev:?}");
            }
            previous = Some(b);
        }
    }
}

#[test]
fn search_is_deterministic() {
    let (net, w, e) = load("mlp");
    let model = QuantizedModel::new(&net, &w, &e).unwrap();
    let base = baseline_accuracy(&model, &e).unwrap();
    let target = AccuracyTarget::new(base.fraction(), 0.99).unwrap();
    let a = search_profile(&model, &e, &target).unwrap();
    let b = search_profile(&model, &e, &target).unwrap();
    assert_eq!(a, b);
}

#[test]
fn accuracy_ignores_sample_order() {
    let (net, w, e) = load("cnn");
    let model = QuantizedModel::new(&net, &w, &e).unwrap();
    let mut shuffled = e.clone();
    shuffled.inputs.reverse();
    shuffled.labels.reverse();
    let n = net.compute_layers().count();
    for p in [16u8, 8, 5, 3] {
        let precs = vec![LayerPrecision::joint(p); n];
        assert_eq!(model.evaluate(&precs, &e).unwrap(), model.evaluate(&precs, &shuffled).unwrap());
    }
}

#[test]
fn one_bit_layer_misses_the_target() {
    let (net, w, e) = load("mlp");
    let model = QuantizedModel::new(&net, &w, &e).unwrap();
    let base = baseline_accuracy(&model, &e).unwrap();
    let target = AccuracyTarget::new(base.fraction(), 0.99).unwrap();
    let n = net.compute_layers().count();
    for i in 0..n {
        let mut precs = vec![LayerPrecision::joint(16); n];
        precs[i] = LayerPrecision::joint(1);
        assert!(!target.met_by(model.evaluate(&precs, &e).unwrap()), "layer {i}");
    }
}

#[test]
fn saturation_rule_keeps_every_frac_at_least_as_wide() {
    let (net, w, e) = load("cnn");
    let wide = QuantizedModel::with_frac_rule(&net, &w, &e, FracRule::MaxNoSaturation).unwrap();
    let narrow = QuantizedModel::new(&net, &w, &e).unwrap();
    for (a, b) in wide.activation_frac_bits().iter().zip(narrow.activation_frac_bits()) {
        assert!(a >= b);
    }
    assert_eq!(baseline_accuracy(&wide, &e).unwrap(), baseline_accuracy(&narrow, &e).unwrap());
}

#[test]
fn ideal_speedup_is_sixteen_over_precision() {
    let (net, w, e) = load("cnn");
    let model = QuantizedModel::new(&net, &w, &e).unwrap();
    let base = baseline_accuracy(&model, &e).unwrap();
    let out = search_profile(&model, &e, &AccuracyTarget::new(base.fraction(), 1.0).unwrap()).unwrap();
    let t = ideal_speedup_table(&net, &out.profile, 16);
    assert!(t.cvl.is_some() && t.fcl.is_some());
    let fc_bits = out.profile.precisions().last().unwrap().max();
    assert!((t.fcl.unwrap() - 16.0 / fc_bits as f64).abs() < 1e-9);
}

#[test]
fn bad_targets_are_rejected() {
    assert!(AccuracyTarget::new(0.9, 1.5).is_err());
    assert!(AccuracyTarget::new(-0.1, 1.0).is_err());
}
