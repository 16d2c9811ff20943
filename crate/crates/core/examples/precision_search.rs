//! Finds per-layer precisions for the small digits networks at 100% and 99%
//! of baseline accuracy, then checks the result against the exhaustive
//! per-layer sweep.
//!
//! cargo run --release --example precision_search [-- cnn]

use tartan::explorer::{
    baseline_accuracy, ideal_speedup_table, is_locally_minimal, load_evalset, load_weights, search_profile,
    sweep_oracle, AccuracyTarget, QuantizedModel,
};
use tartan::netmodel::{fixture_dir, fixture_network};

fn main() -> tartan::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "mlp".into());
    let digits = fixture_dir().join("digits");
    let net = fixture_network(&name)?;
    let weights = load_weights(digits.join(format!("{name}.weights")), &net)?;
    let evalset = load_evalset(digits.join("eval.set"))?;
    let model = QuantizedModel::new(&net, &weights, &evalset)?;
    println!("activation fraction bits per layer: {:?}", model.activation_frac_bits());

    let base = baseline_accuracy(&model, &evalset)?;
    println!("16-bit accuracy {}/{}", base.correct, base.total);
    for thr in [1.0, 0.99] {
        let target = AccuracyTarget::new(base.fraction(), thr)?;
        let out = search_profile(&model, &evalset, &target)?;
        let oracle = sweep_oracle(&model, &evalset, &target, &out.profile)?;
        let ideal = ideal_speedup_table(&net, &out.profile, 16);
        print!("\n{}", out.profile);
        println!(
            "accuracy {}/{} after {} evaluations in {} passes",
            out.accuracy.correct, out.accuracy.total, out.evaluations, out.rounds
        );
        println!(
            "matches sweep: {}  locally minimal: {}  ideal speedup CVL {:?} FCL {:?}",
            oracle == out.profile,
            is_locally_minimal(&model, &evalset, &target, &out.profile)?,
            ideal.cvl.map(|v| (v * 1000.0).round() / 1000.0),
            ideal.fcl.map(|v| (v * 1000.0).round() / 1000.0)
        );
    }
    Ok(())
}
