use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functional::LayerKind;
use crate::netmodel::network::NetworkSpec;
use crate::netmodel::text::{read_source, Lines};

pub const PROFILE_HEADER: &str = "# tartan-profile v1";

/// Activation and weight precision of one compute layer, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LayerPrecision {
    pub pa: u8,
    pub pw: u8,
}

impl LayerPrecision {
    pub const FULL: LayerPrecision = LayerPrecision { pa: 16, pw: 16 };

    pub fn new(pa: u8, pw: u8) -> Self {
        Self { pa, pw }
    }

    /// Fully-connected layers share one precision for both operands.
    pub fn joint(p: u8) -> Self {
        Self { pa: p, pw: p }
    }

    pub fn max(&self) -> u8 {
        self.pa.max(self.pw)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileEntry {
    pub layer: String,
    pub precision: LayerPrecision,
}

/// Per-layer precisions for the compute layers of one network, in network
/// order. Pooling layers carry no entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecisionProfile {
    pub network: String,
    pub accuracy_label: String,
    pub entries: Vec<ProfileEntry>,
}

impl PrecisionProfile {
    /// Every compute layer at `bits` (weights of convolutions stay at 16).
    pub fn uniform(net: &NetworkSpec, bits: u8) -> Self {
        let entries = net
            .compute_layers()
            .map(|l| ProfileEntry {
                layer: l.name.clone(),
                precision: match l.kind {
                    LayerKind::Conv => LayerPrecision::new(bits, 16),
                    _ => LayerPrecision::joint(bits),
                },
            })
            .collect();
        Self {
            network: net.name.clone(),
            accuracy_label: format!("uniform-{bits}"),
            entries,
        }
    }

    /// Builds a profile from the convolution activation precisions and the
    /// fully-connected precisions, each listed in network order.
    pub fn from_groups(net: &NetworkSpec, conv: &[u8], fc: &[u8], label: &str) -> Result<Self> {
        let (mut ci, mut fi) = (conv.iter(), fc.iter());
        let mut entries = Vec::new();
        for l in net.compute_layers() {
            let precision = match l.kind {
                LayerKind::Conv => ci
                    .next()
                    .map(|&p| LayerPrecision::new(p, 16))
                    .ok_or_else(|| Error::Profile("too few convolution precisions".into()))?,
                _ => fi
                    .next()
                    .map(|&p| LayerPrecision::joint(p))
                    .ok_or_else(|| Error::Profile("too few fully-connected precisions".into()))?,
            };
            entries.push(ProfileEntry {
                layer: l.name.clone(),
                precision,
            });
        }
        if ci.next().is_some() || fi.next().is_some() {
            return Err(Error::Profile(format!(
                "more precisions than compute layers in `{}`",
                net.name
            )));
        }
        let p = Self {
            network: net.name.clone(),
            accuracy_label: label.to_string(),
            entries,
        };
        p.validate(net)?;
        Ok(p)
    }

    pub fn precisions(&self) -> impl Iterator<Item = LayerPrecision> + '_ {
        self.entries.iter().map(|e| e.precision)
    }

    pub fn get(&self, layer: &str) -> Option<LayerPrecision> {
        self.entries.iter().find(|e| e.layer == layer).map(|e| e.precision)
    }

    /// Dash-separated precisions of the layers of `kind`, e.g. `9-8-5-5-7`.
    pub fn group_string(&self, net: &NetworkSpec, kind: LayerKind) -> String {
        net.compute_layers()
            .zip(&self.entries)
            .filter(|(l, _)| l.kind == kind)
            .map(|(_, e)| e.precision.pa.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    pub fn validate(&self, net: &NetworkSpec) -> Result<()> {
        let layers: Vec<_> = net.compute_layers().collect();
        if layers.len() != self.entries.len() {
            return Err(Error::Profile(format!(
                "{} entries for {} compute layers of `{}`",
                self.entries.len(),
                layers.len(),
                net.name
            )));
        }
        for (l, e) in layers.iter().zip(&self.entries) {
            if l.name != e.layer {
                return Err(Error::Profile(format!(
                    "entry `{}` where layer `{}` was expected",
                    e.layer, l.name
                )));
            }
            let LayerPrecision { pa, pw } = e.precision;
            for (role, p) in [("Pa", pa), ("Pw", pw)] {
                if !(1..=16).contains(&p) {
                    return Err(Error::Profile(format!(
                        "layer `{}`: {role} = {p} outside 1..=16",
                        l.name
                    )));
                }
            }
            match l.kind {
                LayerKind::FullyConnected if pa != pw => {
                    return Err(Error::Profile(format!(
                        "layer `{}`: fully-connected layers need Pa = Pw (got {pa}, {pw})",
                        l.name
                    )))
                }
                LayerKind::Conv if pw != 16 => {
                    return Err(Error::Profile(format!(
                        "layer `{}`: convolution weights stay at 16 bits (got Pw = {pw})",
                        l.name
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str, net: &NetworkSpec) -> Result<Self> {
        let mut lines = Lines::new(text, origin, PROFILE_HEADER)?;
        let mut network = None;
        let mut label = None;
        let mut entries = Vec::new();
        while let Some((n, line)) = lines.next_line() {
            if let Some((k, v)) = line.split_once('=') {
                match k.trim() {
                    "network" => network = Some(v.trim().to_string()),
                    "accuracy" => label = Some(v.trim().to_string()),
                    other => return Err(lines.error(n, format!("unknown key `{other}`"))),
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(lines.error(n, "expected `<layer> <Pa> <Pw>`"));
            }
            let bits = |s: &str| {
                s.parse::<u8>()
                    .map_err(|_| lines.error(n, format!("`{s}` is not a precision")))
            };
            entries.push(ProfileEntry {
                layer: f[0].to_string(),
                precision: LayerPrecision::new(bits(f[1])?, bits(f[2])?),
            });
        }
        let network = network.unwrap_or_else(|| net.name.clone());
        if network != net.name {
            return Err(Error::Profile(format!(
                "{origin}: profile is for `{network}`, not `{}`",
                net.name
            )));
        }
        let p = Self {
            network,
            accuracy_label: label.unwrap_or_else(|| "custom".into()),
            entries,
        };
        p.validate(net).map_err(|e| match e {
            Error::Profile(m) => Error::Profile(format!("{origin}: {m}")),
            e => e,
        })?;
        Ok(p)
    }
}

impl fmt::Display for PrecisionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{PROFILE_HEADER}")?;
        writeln!(f, "network = {}", self.network)?;
        writeln!(f, "accuracy = {}", self.accuracy_label)?;
        writeln!(f, "# layer Pa Pw")?;
        for e in &self.entries {
            writeln!(f, "{} {} {}", e.layer, e.precision.pa, e.precision.pw)?;
        }
        Ok(())
    }
}

pub fn load_profile(path: impl AsRef<Path>, net: &NetworkSpec) -> Result<PrecisionProfile> {
    let (text, origin) = read_source(path.as_ref())?;
    PrecisionProfile::parse(&text, &origin, net)
}

pub fn save_profile(path: impl AsRef<Path>, profile: &PrecisionProfile) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, profile.to_string()).map_err(|e| Error::io(path, e))
}
