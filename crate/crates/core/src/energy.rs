//! Event-count energy model.
//!
//! Each simulated layer is reduced to a handful of event counters (memory
//! bits moved, adder-tree activations, multiplies, cycles). Energy is the dot
//! product of those counts with a coefficient table plus per-cycle static
//! power, so only ratios between engines are meaningful.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functional::{ArchConfig, Engine, LayerKind, LayerSpec};
use crate::netmodel::{NetworkSpec, PrecisionProfile};
use crate::timing::{simulate_network, CycleReport};

pub const COEFFICIENTS_HEADER: &str = "# tartan-energy v1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnergyEventCounts {
    pub sb_bits_read: u64,
    pub nm_bits_read: u64,
    pub nm_bits_written: u64,
    pub interconnect_bit_hops: u64,
    pub sip_adder_activations: u64,
    pub bitparallel_mult_ops: u64,
    pub idle_sip_cycles: u64,
    pub cycles: u64,
}

impl std::ops::AddAssign for EnergyEventCounts {
    fn add_assign(&mut self, o: Self) {
        self.sb_bits_read += o.sb_bits_read;
        self.nm_bits_read += o.nm_bits_read;
        self.nm_bits_written += o.nm_bits_written;
        self.interconnect_bit_hops += o.interconnect_bit_hops;
        self.sip_adder_activations += o.sip_adder_activations;
        self.bitparallel_mult_ops += o.bitparallel_mult_ops;
        self.idle_sip_cycles += o.idle_sip_cycles;
        self.cycles += o.cycles;
    }
}

/// Abstract energy per event, plus static energy per cycle for each engine
/// (the bit-serial chips are larger and leak more).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCoefficients {
    pub sb_bit_read: f64,
    pub nm_bit_read: f64,
    pub nm_bit_written: f64,
    pub interconnect_bit_hop: f64,
    pub sip_adder_activation: f64,
    pub bitparallel_mult_op: f64,
    pub idle_sip_cycle: f64,
    pub static_per_cycle: [f64; 3],
}

const KEYS: [&str; 10] = [
    "sb_bit_read",
    "nm_bit_read",
    "nm_bit_written",
    "interconnect_bit_hop",
    "sip_adder_activation",
    "bitparallel_mult_op",
    "idle_sip_cycle",
    "static_per_cycle.dadn",
    "static_per_cycle.str",
    "static_per_cycle.trt",
];

fn engine_index(e: Engine) -> usize {
    match e {
        Engine::Dadn => 0,
        Engine::Str => 1,
        Engine::Trt => 2,
    }
}

impl EnergyCoefficients {
    pub fn zero() -> Self {
        Self::from_values([0.0; 10])
    }

    fn from_values(v: [f64; 10]) -> Self {
        Self {
            sb_bit_read: v[0],
            nm_bit_read: v[1],
            nm_bit_written: v[2],
            interconnect_bit_hop: v[3],
            sip_adder_activation: v[4],
            bitparallel_mult_op: v[5],
            idle_sip_cycle: v[6],
            static_per_cycle: [v[7], v[8], v[9]],
        }
    }

    fn values(&self) -> [f64; 10] {
        let s = self.static_per_cycle;
        [
            self.sb_bit_read,
            self.nm_bit_read,
            self.nm_bit_written,
            self.interconnect_bit_hop,
            self.sip_adder_activation,
            self.bitparallel_mult_op,
            self.idle_sip_cycle,
            s[0],
            s[1],
            s[2],
        ]
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == COEFFICIENTS_HEADER => {}
            _ => return Err(err(1, format!("expected header `{COEFFICIENTS_HEADER}`"))),
        }
        let mut vals: [Option<f64>; 10] = [None; 10];
        for (i, raw) in lines {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(i + 1, format!("expected `key = value`, found `{line}`")))?;
            let k = k.trim();
            let idx = KEYS
                .iter()
                .position(|&key| key == k)
                .ok_or_else(|| err(i + 1, format!("unknown energy event `{k}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| err(i + 1, format!("`{}` is not a number", v.trim())))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(err(i + 1, format!("`{k}` must be a non-negative number")));
            }
            vals[idx] = Some(v);
        }
        let mut out = [0.0; 10];
        for (i, v) in vals.iter().enumerate() {
            out[i] = v.ok_or_else(|| Error::Energy(format!("{origin}: missing `{}`", KEYS[i])))?;
        }
        Ok(Self::from_values(out))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The calibration table shipped with the fixtures.
    pub fn calibration() -> Result<Self> {
        Self::load(crate::netmodel::fixture_dir().join("energy/calibration.coeffs"))
    }
}

impl fmt::Display for EnergyCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{COEFFICIENTS_HEADER}")?;
        for (k, v) in KEYS.iter().zip(self.values()) {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Energy of `counts` gathered on `engine`.
pub fn energy(counts: &EnergyEventCounts, engine: Engine, c: &EnergyCoefficients) -> f64 {
    c.sb_bit_read * counts.sb_bits_read as f64
        + c.nm_bit_read * counts.nm_bits_read as f64
        + c.nm_bit_written * counts.nm_bits_written as f64
        + c.interconnect_bit_hop * counts.interconnect_bit_hops as f64
        + c.sip_adder_activation * counts.sip_adder_activations as f64
        + c.bitparallel_mult_op * counts.bitparallel_mult_ops as f64
        + c.idle_sip_cycle * counts.idle_sip_cycles as f64
        + c.static_per_cycle[engine_index(engine)] * counts.cycles as f64
}

/// Event counts for one layer, derived from its cycle report.
pub fn count_layer_events(layer: &LayerSpec, report: &CycleReport, arch: &ArchConfig) -> EnergyEventCounts {
    let engine = report.engine;
    let fc = layer.kind == LayerKind::FullyConnected;
    let serial = engine == Engine::Trt || (engine == Engine::Str && !fc);
    let p = report.precision;
    let act_bits = if serial { arch.effective_precision(p.pa) as u64 } else { 16 };
    let filters = layer.filters as u64;
    let windows = layer.windows() as u64;
    let terms = layer.terms_per_output() as u64;
    let nb = layer.bricks_per_window(arch.brick_size) as u64;
    let filter_passes = layer.filters_per_group().div_ceil(arch.filters_per_chip()) as u64;

    let nm_bits_read = layer.input.volume() as u64 * filter_passes * act_bits;
    let weight_fetches = match (engine, fc) {
        (Engine::Trt, true) => filters * terms * arch.effective_precision(p.pw) as u64,
        _ if serial => filters * windows.div_ceil(arch.columns_per_tile as u64) * terms * 16,
        _ => filters * windows * terms * 16,
    };
    let (sip_adder_activations, bitparallel_mult_ops) = match engine {
        Engine::Dadn => (0, layer.macs()),
        Engine::Str if fc => (filters * nb * arch.slices(16) as u64, 0),
        _ if fc => (filters * nb * arch.slices(p.pa) as u64, 0),
        _ => (report.active_unit_cycles, 0),
    };
    EnergyEventCounts {
        sb_bits_read: weight_fetches,
        nm_bits_read,
        nm_bits_written: layer.output_dims().volume() as u64 * 16,
        interconnect_bit_hops: nm_bits_read * arch.tiles as u64,
        sip_adder_activations,
        bitparallel_mult_ops,
        idle_sip_cycles: report.unit_capacity_cycles - report.active_unit_cycles,
        cycles: report.total_cycles,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerEnergy {
    pub layer: String,
    pub kind: LayerKind,
    pub counts: EnergyEventCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub network: String,
    pub engine: Engine,
    pub layers: Vec<LayerEnergy>,
}

impl EnergyReport {
    pub fn totals(&self, kind: Option<LayerKind>) -> EnergyEventCounts {
        let mut t = EnergyEventCounts::default();
        for l in self.layers.iter().filter(|l| kind.is_none_or(|k| k == l.kind)) {
            t += l.counts;
        }
        t
    }

    pub fn energy(&self, kind: Option<LayerKind>, c: &EnergyCoefficients) -> f64 {
        energy(&self.totals(kind), self.engine, c)
    }
}

pub fn count_events(
    net: &NetworkSpec,
    profile: &PrecisionProfile,
    arch: &ArchConfig,
    engine: Engine,
) -> Result<EnergyReport> {
    let timing = simulate_network(net, profile, arch, engine)?;
    let layers = net
        .compute_layers()
        .zip(&timing.layers)
        .map(|(l, r)| LayerEnergy {
            layer: l.name.clone(),
            kind: l.kind,
            counts: count_layer_events(l, r, arch),
        })
        .collect();
    Ok(EnergyReport {
        network: net.name.clone(),
        engine,
        layers,
    })
}

/// Energy efficiency of `a` relative to `b`: `E(b) / E(a)`.
pub fn efficiency(
    a: &EnergyEventCounts,
    a_engine: Engine,
    b: &EnergyEventCounts,
    b_engine: Engine,
    c: &EnergyCoefficients,
) -> Result<f64> {
    let ea = energy(a, a_engine, c);
    if ea == 0.0 {
        return Err(Error::Energy("zero energy in the denominator".into()));
    }
    Ok(energy(b, b_engine, c) / ea)
}

/// `efficiency` over the layers of `kind` of two reports for the same network.
pub fn report_efficiency(
    a: &EnergyReport,
    b: &EnergyReport,
    kind: Option<LayerKind>,
    c: &EnergyCoefficients,
) -> Result<f64> {
    efficiency(&a.totals(kind), a.engine, &b.totals(kind), b.engine, c)
}
