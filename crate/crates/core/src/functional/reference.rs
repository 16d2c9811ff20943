//! Direct-loop layer evaluation on wide integers, independent of any engine
//! schedule. Serves as the oracle for the engine models and as the inference
//! kernel of the precision explorer.

use crate::error::{Error, Result};
use crate::functional::layer::{LayerKind, LayerSpec};

/// Exact outputs of a convolutional or fully-connected layer, `[y][x][filter]`.
pub fn reference_layer(layer: &LayerSpec, weights: &[i64], acts: &[i64]) -> Result<Vec<i64>> {
    if !layer.is_compute() {
        return Err(Error::UnsupportedKind {
            layer: layer.name.clone(),
            what: "reference evaluation",
        });
    }
    if acts.len() != layer.input.volume() || weights.len() != layer.weight_count() {
        return Err(Error::shape(
            &layer.name,
            format!(
                "{} activations and {} weights, expected {} and {}",
                acts.len(),
                weights.len(),
                layer.input.volume(),
                layer.weight_count()
            ),
        ));
    }
    if layer.kind == LayerKind::FullyConnected {
        let n = acts.len();
        return Ok(weights
            .chunks(n)
            .map(|w| w.iter().zip(acts).map(|(a, b)| a * b).sum())
            .collect());
    }
    let d = layer.input;
    let o = layer.output_dims();
    let (cpg, fpg) = (layer.channels_per_group(), layer.filters_per_group());
    let mut out = vec![0i64; o.volume()];
    for oy in 0..o.y {
        for ox in 0..o.x {
            for f in 0..layer.filters {
                let g = f / fpg;
                let mut sum = 0i64;
                for ky in 0..layer.kernel_y {
                    let iy = (oy * layer.stride + ky) as isize - layer.pad as isize;
                    if iy < 0 || iy as usize >= d.y {
                        continue;
                    }
                    for kx in 0..layer.kernel_x {
                        let ix = (ox * layer.stride + kx) as isize - layer.pad as isize;
                        if ix < 0 || ix as usize >= d.x {
                            continue;
                        }
                        let a0 = (iy as usize * d.x + ix as usize) * d.c + g * cpg;
                        let w0 = ((f * layer.kernel_y + ky) * layer.kernel_x + kx) * cpg;
                        for c in 0..cpg {
                            sum += weights[w0 + c] * acts[a0 + c];
                        }
                    }
                }
                out[(oy * o.x + ox) * layer.filters + f] = sum;
            }
        }
    }
    Ok(out)
}
