use std::path::Path;

use crate::error::{Error, Result};
use crate::fixedpoint::{quantize, FixedPointFormat, FixedPointTensor};
use crate::functional::Dims;
use crate::netmodel::NetworkSpec;

pub const WEIGHTS_HEADER: &str = "# tartan-weights v1";
pub const EVALSET_HEADER: &str = "# tartan-evalset v1";

/// Real-valued weights for every compute layer of a network, in network order
/// and in the layout of [`LayerSpec::weight_shape`](crate::functional::LayerSpec::weight_shape).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSet {
    pub layers: Vec<(String, Vec<f64>)>,
}

impl WeightSet {
    pub fn get(&self, layer: &str) -> Option<&[f64]> {
        self.layers.iter().find(|(n, _)| n == layer).map(|(_, w)| w.as_slice())
    }

    pub fn parse(text: &str, origin: &str, net: &NetworkSpec) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        if lines.next().map(|(_, l)| l.trim()) != Some(WEIGHTS_HEADER) {
            return Err(err(1, format!("expected header `{WEIGHTS_HEADER}`")));
        }
        let mut layers: Vec<(String, usize, Vec<f64>)> = Vec::new();
        for (i, raw) in lines {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("layer ") {
                let mut f = rest.split_whitespace();
                let (Some(name), Some(count), None) = (f.next(), f.next(), f.next()) else {
                    return Err(err(i + 1, "expected `layer <name> <count>`".into()));
                };
                let count = count
                    .parse()
                    .map_err(|_| err(i + 1, format!("`{count}` is not a count")))?;
                layers.push((name.to_string(), count, Vec::with_capacity(count)));
                continue;
            }
            let Some((_, _, vals)) = layers.last_mut() else {
                return Err(err(i + 1, "values before the first `layer` line".into()));
            };
            for t in line.split_whitespace() {
                vals.push(t.parse().map_err(|_| err(i + 1, format!("`{t}` is not a number")))?);
            }
        }
        let compute: Vec<_> = net.compute_layers().collect();
        if compute.len() != layers.len() {
            return Err(Error::Profile(format!(
                "{origin}: {} weight blocks for {} compute layers",
                layers.len(),
                compute.len()
            )));
        }
        let mut out = Vec::new();
        for (l, (name, count, vals)) in compute.iter().zip(layers) {
            if l.name != name || l.weight_count() != count || vals.len() != count {
                return Err(Error::shape(
                    &l.name,
                    format!(
                        "{origin}: block `{name}` holds {} of {count} values, layer needs {}",
                        vals.len(),
                        l.weight_count()
                    ),
                ));
            }
            out.push((name, vals));
        }
        Ok(Self { layers: out })
    }
}

pub fn load_weights(path: impl AsRef<Path>, net: &NetworkSpec) -> Result<WeightSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    WeightSet::parse(&text, &path.display().to_string(), net)
}

/// Labelled evaluation inputs, stored as 16-bit fixed point with the most
/// fractional bits that avoid saturation.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSet {
    pub shape: Dims,
    pub classes: usize,
    pub inputs: Vec<FixedPointTensor>,
    pub labels: Vec<usize>,
}

/// Largest fractional width for which a 16-bit value holds `max_abs`.
pub fn frac_bits_for(max_abs: f64) -> u8 {
    (0..=15u8)
        .rev()
        .find(|&f| max_abs * (f as f64).exp2() <= 32767.0)
        .unwrap_or(0)
}

impl EvalSet {
    pub fn from_real(shape: Dims, classes: usize, samples: Vec<(Vec<f64>, usize)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Usage("evaluation set is empty".into()));
        }
        let max_abs = samples
            .iter()
            .flat_map(|(x, _)| x.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let format = FixedPointFormat::new(16, frac_bits_for(max_abs));
        let mut inputs = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for (x, y) in samples {
            if x.len() != shape.volume() || y >= classes {
                return Err(Error::Usage(format!(
                    "sample with {} values and label {y} does not fit {shape} x {classes} classes",
                    x.len()
                )));
            }
            let data = x.iter().map(|&v| quantize(v, format)).collect();
            inputs.push(FixedPointTensor::new(shape.shape(), data, format));
            labels.push(y);
        }
        Ok(Self {
            shape,
            classes,
            inputs,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        if lines.next().map(|(_, l)| l.trim()) != Some(EVALSET_HEADER) {
            return Err(err(1, format!("expected header `{EVALSET_HEADER}`")));
        }
        let mut shape = None;
        let mut classes = None;
        let mut samples = Vec::new();
        for (i, raw) in lines {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                let nums: Vec<usize> = v
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| err(i + 1, format!("`{t}` is not an integer"))))
                    .collect::<Result<_>>()?;
                match (k.trim(), nums.as_slice()) {
                    ("shape", [x, y, c]) => shape = Some(Dims::new(*x, *y, *c)),
                    ("classes", [n]) => classes = Some(*n),
                    (k, _) => return Err(err(i + 1, format!("bad header field `{k}`"))),
                }
                continue;
            }
            let mut f = line.split_whitespace();
            let label = f
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(i + 1, "sample must start with its label".into()))?;
            let x: Vec<f64> = f
                .map(|t| t.parse().map_err(|_| err(i + 1, format!("`{t}` is not a number"))))
                .collect::<Result<_>>()?;
            samples.push((x, label));
        }
        let shape = shape.ok_or_else(|| err(1, "missing `shape = x y c`".into()))?;
        let classes = classes.ok_or_else(|| err(1, "missing `classes = n`".into()))?;
        Self::from_real(shape, classes, samples)
    }
}

pub fn load_evalset(path: impl AsRef<Path>) -> Result<EvalSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EvalSet::parse(&text, &path.display().to_string())
}
