use std::fmt::{self, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::functional::{Activation, ArchConfig, Dims, LayerKind, LayerSpec};
use crate::netmodel::text::{read_source, Lines};

pub const NETWORK_HEADER: &str = "# tartan-net v1";

/// A linear chain of layers; each layer's input is the previous layer's output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>) -> Result<Self> {
        let net = Self {
            name: name.into(),
            layers,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn input(&self) -> Dims {
        self.layers[0].input
    }

    pub fn output(&self) -> Dims {
        self.layers.last().expect("validated network has layers").output_dims()
    }

    /// Convolutional and fully-connected layers, the ones that carry precisions.
    pub fn compute_layers(&self) -> impl Iterator<Item = &LayerSpec> + '_ {
        self.layers.iter().filter(|l| l.is_compute())
    }

    pub fn layer(&self, name: &str) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::shape(&self.name, "network has no layers"));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, l) in self.layers.iter().enumerate() {
            if !seen.insert(l.name.as_str()) {
                return Err(Error::shape(&l.name, "duplicate layer name"));
            }
            if i == 0 {
                l.validate()?;
                continue;
            }
            let prev = &self.layers[i - 1];
            let incompatible = |msg: String| Error::Incompatible {
                prev: prev.name.clone(),
                next: l.name.clone(),
                msg,
            };
            if l.input != prev.output_dims() {
                return Err(incompatible(format!(
                    "`{}` produces {} but `{}` expects {}",
                    prev.name,
                    prev.output_dims(),
                    l.name,
                    l.input
                )));
            }
            l.validate().map_err(|e| match e {
                Error::Shape { msg, .. } => incompatible(msg),
                e => e,
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = Lines::new(text, origin, NETWORK_HEADER)?;
        let mut name = None;
        let mut dims: Option<Dims> = None;
        let mut layers: Vec<LayerSpec> = Vec::new();
        while let Some((n, line)) = lines.next_line() {
            if let Some(rest) = line.strip_prefix("layer ") {
                let lname = rest
                    .strip_suffix('{')
                    .map(str::trim)
                    .filter(|s| !s.is_empty() && !s.contains(char::is_whitespace))
                    .ok_or_else(|| lines.error(n, "expected `layer <name> {`"))?;
                let input = match (&dims, layers.last()) {
                    (_, Some(prev)) => prev.output_dims(),
                    (Some(d), None) => *d,
                    (None, None) => return Err(lines.error(n, "`input = x y c` must precede the first layer")),
                };
                let block = LayerBlock::read(&mut lines, n)?;
                let layer = block.build(lname, input, &lines)?;
                if let Some(prev) = layers.last() {
                    layer.validate().map_err(|e| match e {
                        Error::Shape { msg, .. } => Error::Incompatible {
                            prev: prev.name.clone(),
                            next: layer.name.clone(),
                            msg,
                        },
                        e => e,
                    })?;
                } else {
                    layer.validate()?;
                }
                layers.push(layer);
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| lines.error(n, format!("expected `key = value`, found `{line}`")))?;
            match k.trim() {
                "name" => name = Some(v.trim().to_string()),
                "input" => {
                    let d = parse_usizes(v, &lines, n)?;
                    if d.len() != 3 {
                        return Err(lines.error(n, "input needs `x y c`"));
                    }
                    dims = Some(Dims::new(d[0], d[1], d[2]));
                }
                other => return Err(lines.error(n, format!("unknown key `{other}`"))),
            }
        }
        let name = name.ok_or_else(|| lines.error(1, "missing `name = ...`"))?;
        if layers.is_empty() {
            return Err(lines.error(1, "network has no layers"));
        }
        Self::new(name, layers)
    }

    /// Warnings for layers whose bricks are only partly filled.
    pub fn validate_brick_alignment(&self, arch: &ArchConfig) -> Vec<String> {
        let bs = arch.brick_size;
        self.compute_layers()
            .filter_map(|l| {
                let ch = l.channels_per_group();
                let rem = ch % bs;
                (rem != 0).then(|| {
                    let what = if l.kind == LayerKind::FullyConnected { "inputs" } else { "channels" };
                    format!(
                        "layer `{}`: {ch} {what} per group is not a multiple of {bs}; \
                         {}/{bs} lanes idle on the last brick",
                        l.name,
                        bs - rem
                    )
                })
            })
            .collect()
    }
}

fn parse_usizes(v: &str, lines: &Lines, n: usize) -> Result<Vec<usize>> {
    v.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| lines.error(n, format!("`{t}` is not a non-negative integer")))
        })
        .collect()
}

#[derive(Default)]
struct LayerBlock {
    start: usize,
    kind: Option<LayerKind>,
    filters: Option<usize>,
    kernel: Option<(usize, usize)>,
    stride: Option<usize>,
    pad: Option<usize>,
    groups: Option<usize>,
    activation: Activation,
    ceil: bool,
    input: Option<(usize, Dims)>,
}

impl LayerBlock {
    fn read(lines: &mut Lines, start: usize) -> Result<Self> {
        let mut b = LayerBlock {
            start,
            ..Default::default()
        };
        loop {
            let (n, line) = lines
                .next_line()
                .ok_or_else(|| lines.error(start, "unterminated layer block"))?;
            if line == "}" {
                return Ok(b);
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| lines.error(n, format!("expected `key = value`, found `{line}`")))?;
            let v = v.trim();
            let one = |lines: &Lines| -> Result<usize> {
                match parse_usizes(v, lines, n)?.as_slice() {
                    [x] => Ok(*x),
                    _ => Err(lines.error(n, format!("`{}` takes one integer", k.trim()))),
                }
            };
            match k.trim() {
                "kind" => {
                    b.kind = Some(match v {
                        "conv" => LayerKind::Conv,
                        "fc" => LayerKind::FullyConnected,
                        "maxpool" => LayerKind::MaxPool,
                        _ => return Err(lines.error(n, format!("unknown layer kind `{v}`"))),
                    })
                }
                "filters" | "outputs" => b.filters = Some(one(lines)?),
                "kernel" => {
                    b.kernel = Some(match parse_usizes(v, lines, n)?.as_slice() {
                        [k] => (*k, *k),
                        [kx, ky] => (*kx, *ky),
                        _ => return Err(lines.error(n, "kernel takes `k` or `kx ky`")),
                    })
                }
                "stride" => b.stride = Some(one(lines)?),
                "pad" => b.pad = Some(one(lines)?),
                "groups" => b.groups = Some(one(lines)?),
                "activation" => {
                    b.activation = match v {
                        "relu" => Activation::Relu,
                        "none" => Activation::None,
                        _ => return Err(lines.error(n, format!("unknown activation `{v}`"))),
                    }
                }
                "ceil" => {
                    b.ceil = v
                        .parse()
                        .map_err(|_| lines.error(n, "ceil takes `true` or `false`"))?
                }
                "input" => {
                    let d = parse_usizes(v, lines, n)?;
                    if d.len() != 3 {
                        return Err(lines.error(n, "input needs `x y c`"));
                    }
                    b.input = Some((n, Dims::new(d[0], d[1], d[2])));
                }
                other => return Err(lines.error(n, format!("unknown layer key `{other}`"))),
            }
        }
    }

    fn build(self, name: &str, input: Dims, lines: &Lines) -> Result<LayerSpec> {
        if let Some((n, d)) = self.input {
            if d != input {
                return Err(lines.error(
                    n,
                    format!("layer `{name}` declares input {d} but receives {input}"),
                ));
            }
        }
        let kind = self.kind.ok_or_else(|| lines.error(self.start, format!("layer `{name}` has no kind")))?;
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| lines.error(self.start, format!("layer `{name}` needs `{key}`")))
        };
        let mut l = match kind {
            LayerKind::Conv => {
                let (kx, ky) = self
                    .kernel
                    .ok_or_else(|| lines.error(self.start, format!("layer `{name}` needs `kernel`")))?;
                let mut l = LayerSpec::conv(
                    name,
                    input,
                    need(self.filters, "filters")?,
                    kx,
                    self.stride.unwrap_or(1),
                    self.pad.unwrap_or(0),
                );
                l.kernel_y = ky;
                l.with_groups(self.groups.unwrap_or(1))
            }
            LayerKind::FullyConnected => LayerSpec::fully_connected(name, input, need(self.filters, "outputs")?),
            LayerKind::MaxPool => {
                let (kx, ky) = self
                    .kernel
                    .ok_or_else(|| lines.error(self.start, format!("layer `{name}` needs `kernel`")))?;
                let mut l = LayerSpec::max_pool(name, input, kx, self.stride.unwrap_or(kx));
                l.kernel_y = ky;
                l
            }
        };
        l.activation = self.activation;
        l.ceil_mode = self.ceil;
        Ok(l)
    }
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let d = self.input();
        writeln!(s, "{NETWORK_HEADER}")?;
        writeln!(s, "name = {}", self.name)?;
        writeln!(s, "input = {} {} {}", d.x, d.y, d.c)?;
        for l in &self.layers {
            writeln!(s)?;
            writeln!(s, "layer {} {{", l.name)?;
            writeln!(s, "  kind = {}", l.kind.keyword())?;
            match l.kind {
                LayerKind::Conv => {
                    writeln!(s, "  filters = {}", l.filters)?;
                    writeln!(s, "  kernel = {} {}", l.kernel_x, l.kernel_y)?;
                    writeln!(s, "  stride = {}", l.stride)?;
                    writeln!(s, "  pad = {}", l.pad)?;
                    writeln!(s, "  groups = {}", l.groups)?;
                }
                LayerKind::FullyConnected => writeln!(s, "  outputs = {}", l.filters)?,
                LayerKind::MaxPool => {
                    writeln!(s, "  kernel = {} {}", l.kernel_x, l.kernel_y)?;
                    writeln!(s, "  stride = {}", l.stride)?;
                    writeln!(s, "  ceil = {}", l.ceil_mode)?;
                }
            }
            if l.activation == Activation::Relu {
                writeln!(s, "  activation = relu")?;
            }
            writeln!(s, "}}")?;
        }
        f.write_str(&s)
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    let (text, origin) = read_source(path.as_ref())?;
    NetworkSpec::parse(&text, &origin)
}

pub fn save_network(path: impl AsRef<Path>, net: &NetworkSpec) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, net.to_string()).map_err(|e| Error::io(path, e))
}
