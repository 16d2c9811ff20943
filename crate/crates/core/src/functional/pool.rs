use crate::error::{Error, Result};
use crate::fixedpoint::FixedPointTensor;
use crate::functional::layer::{Activation, LayerKind, LayerSpec};

/// Max pooling for pool layers, or the layer's activation function applied
/// elementwise for compute layers. Windows that run past the input edge in
/// ceil mode are clipped.
pub fn apply_pool_and_activation(t: &FixedPointTensor, layer: &LayerSpec) -> Result<FixedPointTensor> {
    match layer.kind {
        LayerKind::MaxPool => max_pool(t, layer),
        _ => {
            let out = layer.output_dims();
            if t.shape() != out.shape().as_slice() {
                return Err(Error::shape(
                    &layer.name,
                    format!("output shape {:?}, expected {:?}", t.shape(), out.shape()),
                ));
            }
            Ok(match layer.activation {
                Activation::None => t.clone(),
                Activation::Relu => relu(t),
            })
        }
    }
}

pub fn relu(t: &FixedPointTensor) -> FixedPointTensor {
    let data = t.data().iter().map(|&v| v.max(0)).collect();
    FixedPointTensor::new(t.shape().to_vec(), data, t.format())
}

fn max_pool(t: &FixedPointTensor, layer: &LayerSpec) -> Result<FixedPointTensor> {
    layer.validate()?;
    let d = layer.input;
    if t.shape() != d.shape().as_slice() {
        return Err(Error::shape(
            &layer.name,
            format!("pool input shape {:?}, expected {:?}", t.shape(), d.shape()),
        ));
    }
    let o = layer.output_dims();
    let src = t.data();
    let mut data = Vec::with_capacity(o.volume());
    for oy in 0..o.y {
        let y0 = oy * layer.stride;
        let y1 = (y0 + layer.kernel_y).min(d.y);
        for ox in 0..o.x {
            let x0 = ox * layer.stride;
            let x1 = (x0 + layer.kernel_x).min(d.x);
            for c in 0..d.c {
                let mut m = i32::MIN;
                for y in y0..y1 {
                    for x in x0..x1 {
                        m = m.max(src[(y * d.x + x) * d.c + c]);
                    }
                }
                data.push(m);
            }
        }
    }
    let mut out = FixedPointTensor::new(o.shape(), data, t.format());
    if layer.activation == Activation::Relu {
        out = relu(&out);
    }
    Ok(out)
}
