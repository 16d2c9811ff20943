use crate::error::{Error, Result};
use crate::explorer::data::{frac_bits_for, EvalSet, WeightSet};
use crate::fixedpoint::{requantize_tensor, rescale, FixedPointFormat, FixedPointTensor};
use crate::functional::{reference_layer, Activation, LayerKind, LayerSpec};
use crate::netmodel::{LayerPrecision, NetworkSpec, PrecisionProfile};

/// Correct top-1 predictions over an evaluation set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    pub fn fraction(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// How the fixed fractional width of each layer's input activations is chosen
/// before the search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FracRule {
    /// Widest fraction that does not saturate at 16 bits. Leaves no spare
    /// integer bits, so any `Pa` below 16 starts clipping.
    MaxNoSaturation,
    /// Narrowest fraction that keeps 16-bit accuracy unchanged, chosen layer
    /// by layer from the input, starting from the widest.
    #[default]
    MinLossless,
}

/// A network with real weights ready for reduced-precision inference.
///
/// Weights use `{Pw, Pw - 1}` (range [-1, 1)). Each compute layer's
/// activations keep a fractional width fixed before the search (see
/// [`FracRule`]); lowering `Pa` removes integer bits first, and below that
/// width the format becomes all-fractional.
pub struct QuantizedModel<'a> {
    net: &'a NetworkSpec,
    compute: Vec<&'a LayerSpec>,
    /// `[layer][pw - 1]` quantized weights.
    weights: Vec<Vec<Vec<i64>>>,
    act_frac: Vec<u8>,
}

fn pool_i64(layer: &LayerSpec, x: &[i64]) -> Vec<i64> {
    let d = layer.input;
    let o = layer.output_dims();
    let mut out = Vec::with_capacity(o.volume());
    for oy in 0..o.y {
        let (y0, y1) = (oy * layer.stride, (oy * layer.stride + layer.kernel_y).min(d.y));
        for ox in 0..o.x {
            let (x0, x1) = (ox * layer.stride, (ox * layer.stride + layer.kernel_x).min(d.x));
            for c in 0..d.c {
                let mut m = i64::MIN;
                for y in y0..y1 {
                    for xx in x0..x1 {
                        m = m.max(x[(y * d.x + xx) * d.c + c]);
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

fn argmax(v: &[i64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, i64::MIN), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

impl<'a> QuantizedModel<'a> {
    pub fn new(net: &'a NetworkSpec, weights: &'a WeightSet, evalset: &EvalSet) -> Result<Self> {
        Self::with_frac_rule(net, weights, evalset, FracRule::default())
    }

    pub fn with_frac_rule(
        net: &'a NetworkSpec,
        weights: &'a WeightSet,
        evalset: &EvalSet,
        rule: FracRule,
    ) -> Result<Self> {
        if evalset.shape != net.input() {
            return Err(Error::shape(
                &net.name,
                format!("evaluation inputs are {}, network takes {}", evalset.shape, net.input()),
            ));
        }
        let compute: Vec<&LayerSpec> = net.compute_layers().collect();
        let mut real = Vec::new();
        let mut quant = Vec::new();
        for l in &compute {
            let w = weights
                .get(&l.name)
                .ok_or_else(|| Error::shape(&l.name, "no weights for layer"))?;
            if w.len() != l.weight_count() {
                return Err(Error::shape(&l.name, "weight count mismatch"));
            }
            let full = FixedPointTensor::from_real(l.weight_shape(), w, FixedPointFormat::unit_range(16));
            quant.push(
                (1..=16u8)
                    .map(|pw| {
                        requantize_tensor(&full, FixedPointFormat::unit_range(pw))
                            .data()
                            .iter()
                            .map(|&v| v as i64)
                            .collect()
                    })
                    .collect(),
            );
            real.push(w);
        }

        // Float pass: largest magnitude reaching each compute layer's input.
        let mut max_in = vec![0.0f64; compute.len()];
        for input in &evalset.inputs {
            let mut x: Vec<f64> = input.to_real();
            let mut ci = 0;
            for l in &net.layers {
                match l.kind {
                    LayerKind::MaxPool => {
                        x = pool_f64(l, &x);
                    }
                    _ => {
                        max_in[ci] = x.iter().fold(max_in[ci], |m, v| m.max(v.abs()));
                        x = dense_f64(l, real[ci], &x);
                        ci += 1;
                    }
                }
                if l.activation == Activation::Relu {
                    x.iter_mut().for_each(|v| *v = v.max(0.0));
                }
            }
        }
        let mut act_frac: Vec<u8> = max_in.iter().map(|&m| frac_bits_for(m)).collect();
        act_frac[0] = act_frac[0].min(evalset.inputs[0].format().frac_bits());
        let mut model = Self {
            net,
            compute,
            weights: quant,
            act_frac,
        };
        if rule == FracRule::MinLossless {
            let full = vec![LayerPrecision::FULL; model.compute.len()];
            let base = model.evaluate(&full, evalset)?.correct;
            for i in 0..model.act_frac.len() {
                while model.act_frac[i] > 0 {
                    model.act_frac[i] -= 1;
                    if model.evaluate(&full, evalset)?.correct < base {
                        model.act_frac[i] += 1;
                        break;
                    }
                }
            }
        }
        Ok(model)
    }

    pub fn network(&self) -> &NetworkSpec {
        self.net
    }

    /// Fractional widths chosen for each compute layer's input at 16 bits.
    pub fn activation_frac_bits(&self) -> &[u8] {
        &self.act_frac
    }

    pub fn activation_format(&self, layer: usize, pa: u8) -> FixedPointFormat {
        FixedPointFormat::new(pa, self.act_frac[layer].min(pa))
    }

    /// Predicted class for one input under the given per-layer precisions.
    pub fn predict(&self, precs: &[LayerPrecision], input: &FixedPointTensor) -> Result<usize> {
        let mut x: Vec<i64> = input.data().iter().map(|&v| v as i64).collect();
        let mut frac = input.format().frac_bits();
        let mut ci = 0;
        for l in &self.net.layers {
            match l.kind {
                LayerKind::MaxPool => x = pool_i64(l, &x),
                _ => {
                    let p = precs[ci];
                    let af = self.activation_format(ci, p.pa);
                    x.iter_mut().for_each(|v| *v = rescale(*v, frac, af) as i64);
                    let wf = FixedPointFormat::unit_range(p.pw);
                    x = reference_layer(l, &self.weights[ci][p.pw as usize - 1], &x)?;
                    frac = af.frac_bits() + wf.frac_bits();
                    ci += 1;
                }
            }
            if l.activation == Activation::Relu {
                x.iter_mut().for_each(|v| *v = (*v).max(0));
            }
        }
        Ok(argmax(&x))
    }

    pub fn evaluate(&self, precs: &[LayerPrecision], evalset: &EvalSet) -> Result<Accuracy> {
        if precs.len() != self.compute.len() {
            return Err(Error::Profile(format!(
                "{} precisions for {} compute layers",
                precs.len(),
                self.compute.len()
            )));
        }
        let mut correct = 0;
        for (x, &y) in evalset.inputs.iter().zip(&evalset.labels) {
            if self.predict(precs, x)? == y {
                correct += 1;
            }
        }
        Ok(Accuracy {
            correct,
            total: evalset.len(),
        })
    }
}

fn dense_f64(l: &LayerSpec, w: &[f64], x: &[f64]) -> Vec<f64> {
    let d = l.input;
    if l.kind == LayerKind::FullyConnected {
        return w.chunks(x.len()).map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
    }
    let o = l.output_dims();
    let (cpg, fpg) = (l.channels_per_group(), l.filters_per_group());
    let mut out = vec![0.0; o.volume()];
    for oy in 0..o.y {
        for ox in 0..o.x {
            for f in 0..l.filters {
                let g = f / fpg;
                let mut s = 0.0;
                for ky in 0..l.kernel_y {
                    let iy = (oy * l.stride + ky) as isize - l.pad as isize;
                    if iy < 0 || iy as usize >= d.y {
                        continue;
                    }
                    for kx in 0..l.kernel_x {
                        let ix = (ox * l.stride + kx) as isize - l.pad as isize;
                        if ix < 0 || ix as usize >= d.x {
                            continue;
                        }
                        let a0 = (iy as usize * d.x + ix as usize) * d.c + g * cpg;
                        let w0 = ((f * l.kernel_y + ky) * l.kernel_x + kx) * cpg;
                        for c in 0..cpg {
                            s += w[w0 + c] * x[a0 + c];
                        }
                    }
                }
                out[(oy * o.x + ox) * l.filters + f] = s;
            }
        }
    }
    out
}

fn pool_f64(l: &LayerSpec, x: &[f64]) -> Vec<f64> {
    let d = l.input;
    let o = l.output_dims();
    let mut out = Vec::with_capacity(o.volume());
    for oy in 0..o.y {
        for ox in 0..o.x {
            for c in 0..d.c {
                let mut m = f64::NEG_INFINITY;
                for y in oy * l.stride..(oy * l.stride + l.kernel_y).min(d.y) {
                    for xx in ox * l.stride..(ox * l.stride + l.kernel_x).min(d.x) {
                        m = m.max(x[(y * d.x + xx) * d.c + c]);
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

/// Top-1 accuracy of `model` with `profile` applied.
pub fn evaluate_accuracy(model: &QuantizedModel, profile: &PrecisionProfile, evalset: &EvalSet) -> Result<Accuracy> {
    profile.validate(model.network())?;
    let precs: Vec<_> = profile.precisions().collect();
    model.evaluate(&precs, evalset)
}
