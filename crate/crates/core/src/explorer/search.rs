use crate::error::{Error, Result};
use crate::explorer::data::EvalSet;
use crate::explorer::infer::{Accuracy, QuantizedModel};
use crate::functional::LayerKind;
use crate::netmodel::{LayerPrecision, PrecisionProfile, ProfileEntry};

/// Accuracy a reduced-precision profile must keep: at least
/// `relative_threshold * baseline_accuracy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracyTarget {
    pub baseline_accuracy: f64,
    pub relative_threshold: f64,
}

impl AccuracyTarget {
    pub fn new(baseline_accuracy: f64, relative_threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&baseline_accuracy) || !(0.0..=1.0).contains(&relative_threshold) {
            return Err(Error::Usage(format!(
                "accuracy target {relative_threshold} x {baseline_accuracy} outside [0, 1]"
            )));
        }
        Ok(Self {
            baseline_accuracy,
            relative_threshold,
        })
    }

    pub fn met_by(&self, acc: Accuracy) -> bool {
        acc.fraction() >= self.baseline_accuracy * self.relative_threshold - 1e-12
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub profile: PrecisionProfile,
    pub accuracy: Accuracy,
    pub baseline: Accuracy,
    pub evaluations: usize,
    pub rounds: usize,
}

/// One precision per compute layer: `Pa` for convolutions (weights stay at
/// 16 bits), `Pa = Pw` for fully-connected layers.
fn to_precisions(model: &QuantizedModel, bits: &[u8]) -> Vec<LayerPrecision> {
    model
        .network()
        .compute_layers()
        .zip(bits)
        .map(|(l, &p)| match l.kind {
            LayerKind::Conv => LayerPrecision::new(p, 16),
            _ => LayerPrecision::joint(p),
        })
        .collect()
}

fn to_profile(model: &QuantizedModel, bits: &[u8], label: &str) -> PrecisionProfile {
    let net = model.network();
    PrecisionProfile {
        network: net.name.clone(),
        accuracy_label: label.to_string(),
        entries: net
            .compute_layers()
            .zip(to_precisions(model, bits))
            .map(|(l, precision)| ProfileEntry {
                layer: l.name.clone(),
                precision,
            })
            .collect(),
    }
}

fn label_for(target: &AccuracyTarget) -> String {
    format!("{}%", (target.relative_threshold * 100.0 * 1e6).round() / 1e6)
}

/// Baseline accuracy with every layer at 16 bits.
pub fn baseline_accuracy(model: &QuantizedModel, evalset: &EvalSet) -> Result<Accuracy> {
    let n = model.network().compute_layers().count();
    model.evaluate(&to_precisions(model, &vec![16; n]), evalset)
}

/// Per-layer descent: visiting layers input to output, each visit lowers the
/// layer one bit at a time until the next step would miss the target; passes
/// repeat until one makes no change.
pub fn search_profile(model: &QuantizedModel, evalset: &EvalSet, target: &AccuracyTarget) -> Result<SearchOutcome> {
    let n = model.network().compute_layers().count();
    let mut bits = vec![16u8; n];
    let baseline = baseline_accuracy(model, evalset)?;
    let mut evaluations = 1;
    let mut accuracy = baseline;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut changed = false;
        for i in 0..n {
            while bits[i] > 1 {
                bits[i] -= 1;
                let acc = model.evaluate(&to_precisions(model, &bits), evalset)?;
                evaluations += 1;
                if target.met_by(acc) {
                    accuracy = acc;
                    changed = true;
                } else {
                    bits[i] += 1;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(SearchOutcome {
        profile: to_profile(model, &bits, &label_for(target)),
        accuracy,
        baseline,
        evaluations,
        rounds,
    })
}

fn bits_of(profile: &PrecisionProfile) -> Vec<u8> {
    profile.precisions().map(|p| p.pa).collect()
}

/// Brute-force reference: for each layer, with every other layer held at
/// `converged`, evaluate every precision in 1..=16 and keep the smallest that
/// meets the target. Accuracy need not be monotone in precision, so this can
/// sit below a greedy descent that stopped at the first miss.
pub fn sweep_oracle(
    model: &QuantizedModel,
    evalset: &EvalSet,
    target: &AccuracyTarget,
    converged: &PrecisionProfile,
) -> Result<PrecisionProfile> {
    let base = bits_of(converged);
    let mut result = base.clone();
    for i in 0..base.len() {
        let mut bits = base.clone();
        let mut best = 16;
        for p in (1..=16u8).rev() {
            bits[i] = p;
            if target.met_by(model.evaluate(&to_precisions(model, &bits), evalset)?) {
                best = p;
            }
        }
        result[i] = best;
    }
    Ok(to_profile(model, &result, &converged.accuracy_label))
}

/// True when `profile` meets the target and lowering any single entry by one
/// bit does not.
pub fn is_locally_minimal(
    model: &QuantizedModel,
    evalset: &EvalSet,
    target: &AccuracyTarget,
    profile: &PrecisionProfile,
) -> Result<bool> {
    let bits = bits_of(profile);
    if !target.met_by(model.evaluate(&to_precisions(model, &bits), evalset)?) {
        return Ok(false);
    }
    for i in 0..bits.len() {
        if bits[i] == 1 {
            continue;
        }
        let mut lower = bits.clone();
        lower[i] -= 1;
        if target.met_by(model.evaluate(&to_precisions(model, &lower), evalset)?) {
            return Ok(false);
        }
    }
    Ok(true)
}
