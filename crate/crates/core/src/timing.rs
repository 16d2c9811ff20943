//! Cycle-count model for the three engines.
//!
//! Counts follow the same loop nests the functional models walk, so the two
//! can be cross-checked on small layers:
//!
//! * baseline: one activation brick per filter group per cycle; every tile
//!   handles `filters_per_tile` filters, so a pass covers `filters_per_chip`
//!   filters, one window and one brick per cycle;
//! * bit-serial convolutions: a pass covers `filters_per_chip` filters and
//!   `columns_per_tile` windows (row-major, the last block padded with idle
//!   columns) and takes `ceil(Pa / B)` cycles per brick;
//! * bit-serial fully-connected layers: outputs are sliced `np` ways over
//!   cascaded SIPs, each brick wave takes `max(ceil(Pa / B), ceil(Pw / B))`
//!   cycles because the next weights shift in while the current ones are
//!   used, and every output wave ends with `np` reduction cycles.
//!
//! Only the very first weight load of a layer is exposed.

use crate::error::{Error, Result};
use crate::functional::{default_cascade, ArchConfig, Engine, LayerKind, LayerSpec};
use crate::netmodel::{LayerPrecision, NetworkSpec, PrecisionProfile};

/// Clock used to turn cycles into wall time in reports.
pub const DEFAULT_CLOCK_MHZ: f64 = 980.0;

pub fn wall_time_us(cycles: u64, clock_mhz: f64) -> f64 {
    cycles as f64 / clock_mhz
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CascadePlan {
    pub np: usize,
}

/// Slices per output: the largest power of two no greater than 16, the SIP
/// columns of a row, or `SIPs / outputs`; never less than 1.
pub fn choose_cascade(outputs: usize, arch: &ArchConfig) -> CascadePlan {
    CascadePlan {
        np: default_cascade(outputs, arch),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleReport {
    pub layer: String,
    pub kind: LayerKind,
    pub engine: Engine,
    pub precision: LayerPrecision,
    pub macs: u64,
    pub total_cycles: u64,
    /// Exposed weight-loading cycles (the first load only).
    pub weight_load_cycles: u64,
    pub compute_cycles: u64,
    pub cascade_reduce_cycles: u64,
    pub cascade_slices: usize,
    /// Unit-cycles with work assigned: SIPs for the bit-serial engines,
    /// 16-lane filter units for the baseline.
    pub active_unit_cycles: u64,
    /// Units times compute cycles.
    pub unit_capacity_cycles: u64,
    pub idle_sip_fraction: f64,
    pub dispatch_overhead_fraction: f64,
}

impl CycleReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        layer: &LayerSpec,
        engine: Engine,
        precision: LayerPrecision,
        weight_load_cycles: u64,
        compute_cycles: u64,
        cascade_reduce_cycles: u64,
        cascade_slices: usize,
        active_unit_cycles: u64,
        units: u64,
    ) -> Self {
        let total_cycles = weight_load_cycles + compute_cycles + cascade_reduce_cycles;
        let unit_capacity_cycles = compute_cycles * units;
        Self {
            layer: layer.name.clone(),
            kind: layer.kind,
            engine,
            precision,
            macs: layer.macs(),
            total_cycles,
            weight_load_cycles,
            compute_cycles,
            cascade_reduce_cycles,
            cascade_slices,
            active_unit_cycles,
            unit_capacity_cycles,
            idle_sip_fraction: 1.0 - active_unit_cycles as f64 / unit_capacity_cycles as f64,
            dispatch_overhead_fraction: weight_load_cycles as f64 / total_cycles as f64,
        }
    }
}

fn require_compute(layer: &LayerSpec) -> Result<()> {
    if layer.is_compute() {
        layer.validate()
    } else {
        Err(Error::UnsupportedKind {
            layer: layer.name.clone(),
            what: "cycle counting",
        })
    }
}

fn check_precision(layer: &LayerSpec, p: LayerPrecision) -> Result<()> {
    for (role, v) in [("Pa", p.pa), ("Pw", p.pw)] {
        if !(1..=16).contains(&v) {
            return Err(Error::Profile(format!(
                "layer `{}`: {role} = {v} outside 1..=16",
                layer.name
            )));
        }
    }
    Ok(())
}

/// Filter passes, windows and bricks per window of a compute layer.
fn loop_nest(layer: &LayerSpec, arch: &ArchConfig) -> (u64, u64, u64) {
    let passes = layer.groups * layer.filters_per_group().div_ceil(arch.filters_per_chip());
    (
        passes as u64,
        layer.windows() as u64,
        layer.bricks_per_window(arch.brick_size) as u64,
    )
}

pub fn cycles_dadn(layer: &LayerSpec, arch: &ArchConfig) -> Result<CycleReport> {
    require_compute(layer)?;
    let (passes, windows, bricks) = loop_nest(layer, arch);
    let compute = passes * windows * bricks;
    let active = (layer.filters as u64) * windows * bricks;
    Ok(CycleReport::new(
        layer,
        Engine::Dadn,
        LayerPrecision::FULL,
        0,
        compute,
        0,
        1,
        active,
        arch.filters_per_chip() as u64,
    ))
}

/// Bit-serial convolution timing, shared by STR and TRT.
pub fn cycles_trt_cvl(layer: &LayerSpec, prec: LayerPrecision, arch: &ArchConfig) -> Result<CycleReport> {
    require_compute(layer)?;
    check_precision(layer, prec)?;
    let (passes, windows, bricks) = loop_nest(layer, arch);
    let slices = arch.slices(prec.pa) as u64;
    let blocks = windows.div_ceil(arch.columns_per_tile as u64);
    let compute = passes * blocks * bricks * slices;
    let active = layer.filters as u64 * windows * bricks * slices;
    // weights reach the WRs in one parallel load, hidden after the first
    Ok(CycleReport::new(
        layer,
        Engine::Trt,
        prec,
        1,
        compute,
        0,
        1,
        active,
        arch.total_sips() as u64,
    ))
}

pub fn cycles_trt_fcl(
    layer: &LayerSpec,
    prec: LayerPrecision,
    arch: &ArchConfig,
    plan: CascadePlan,
) -> Result<CycleReport> {
    require_compute(layer)?;
    check_precision(layer, prec)?;
    let np = plan.np;
    if !(1..=16).contains(&np) || !np.is_power_of_two() || np > arch.columns_per_tile {
        return Err(Error::Cascade(np));
    }
    let outputs = layer.filters as u64;
    let slots = (arch.total_sips() / np) as u64;
    let waves = outputs.div_ceil(slots);
    let nb = layer.bricks_per_window(arch.brick_size) as u64;
    let brick_waves = nb.div_ceil(np as u64);
    let sa = arch.slices(prec.pa) as u64;
    let sw = arch.slices(prec.pw) as u64;
    let step = sa.max(sw);
    let compute = waves * brick_waves * step;
    let reduce = if np > 1 { waves * np as u64 } else { 0 };
    let active = outputs * nb * step;
    Ok(CycleReport::new(
        layer,
        Engine::Trt,
        prec,
        sw,
        compute,
        reduce,
        np,
        active,
        arch.total_sips() as u64,
    ))
}

/// Cycle report for any compute layer on `engine`.
///
/// ```
/// use tartan::functional::{ArchConfig, Dims, Engine, LayerSpec};
/// use tartan::netmodel::LayerPrecision;
/// use tartan::timing::cycles_layer;
///
/// let fc = LayerSpec::fully_connected("fc", Dims::new(1, 1, 4096), 4096);
/// let arch = ArchConfig::default();
/// let base = cycles_layer(&fc, LayerPrecision::joint(8), &arch, Engine::Dadn).unwrap();
/// let trt = cycles_layer(&fc, LayerPrecision::joint(8), &arch, Engine::Trt).unwrap();
/// assert!(trt.total_cycles * 2 <= base.total_cycles + 16);
/// ```
pub fn cycles_layer(
    layer: &LayerSpec,
    prec: LayerPrecision,
    arch: &ArchConfig,
    engine: Engine,
) -> Result<CycleReport> {
    let mut r = match (engine, layer.kind) {
        (Engine::Dadn, _) | (Engine::Str, LayerKind::FullyConnected) => {
            let mut r = cycles_dadn(layer, arch)?;
            r.precision = prec;
            r
        }
        (_, LayerKind::Conv) => cycles_trt_cvl(layer, prec, arch)?,
        (Engine::Trt, LayerKind::FullyConnected) => {
            cycles_trt_fcl(layer, prec, arch, choose_cascade(layer.filters, arch))?
        }
        (_, LayerKind::MaxPool) => {
            return Err(Error::UnsupportedKind {
                layer: layer.name.clone(),
                what: "cycle counting",
            })
        }
    };
    r.engine = engine;
    Ok(r)
}

/// Per-layer reports of one engine alongside the baseline on the same chip.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkReport {
    pub network: String,
    pub engine: Engine,
    pub arch: ArchConfig,
    pub layers: Vec<CycleReport>,
    pub baseline: Vec<CycleReport>,
}

fn matches(kind: Option<LayerKind>, r: &CycleReport) -> bool {
    kind.is_none_or(|k| k == r.kind)
}

impl NetworkReport {
    pub fn total_cycles(&self, kind: Option<LayerKind>) -> u64 {
        self.layers.iter().filter(|r| matches(kind, r)).map(|r| r.total_cycles).sum()
    }

    pub fn baseline_cycles(&self, kind: Option<LayerKind>) -> u64 {
        self.baseline.iter().filter(|r| matches(kind, r)).map(|r| r.total_cycles).sum()
    }

    /// Baseline time over engine time for the layers of `kind` (all layers
    /// when `None`).
    pub fn speedup(&self, kind: Option<LayerKind>) -> f64 {
        self.baseline_cycles(kind) as f64 / self.total_cycles(kind) as f64
    }

    pub fn layer_speedups(&self) -> Vec<f64> {
        self.layers
            .iter()
            .zip(&self.baseline)
            .map(|(r, b)| b.total_cycles as f64 / r.total_cycles as f64)
            .collect()
    }

    /// Exposed weight loading as a fraction of the time spent in layers of `kind`.
    pub fn dispatch_overhead_fraction(&self, kind: Option<LayerKind>) -> f64 {
        let load: u64 = self
            .layers
            .iter()
            .filter(|r| matches(kind, r))
            .map(|r| r.weight_load_cycles)
            .sum();
        load as f64 / self.total_cycles(kind) as f64
    }

    pub fn max_layer_dispatch_overhead(&self) -> f64 {
        self.layers
            .iter()
            .map(|r| r.dispatch_overhead_fraction)
            .fold(0.0, f64::max)
    }
}

pub fn simulate_network(
    net: &NetworkSpec,
    profile: &PrecisionProfile,
    arch: &ArchConfig,
    engine: Engine,
) -> Result<NetworkReport> {
    arch.validate()?;
    let mut layers = Vec::new();
    let mut baseline = Vec::new();
    for l in net.compute_layers() {
        let prec = profile.get(&l.name).ok_or_else(|| {
            Error::Profile(format!("no precision entry for layer `{}`", l.name))
        })?;
        layers.push(cycles_layer(l, prec, arch, engine)?);
        baseline.push(cycles_layer(l, prec, arch, Engine::Dadn)?);
    }
    Ok(NetworkReport {
        network: net.name.clone(),
        engine,
        arch: *arch,
        layers,
        baseline,
    })
}

/// Relative performance of the multi-bit variant: each field is a fractional
/// change, e.g. `0.60` for 60% faster.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiBitComparison {
    pub network: String,
    pub bits_per_cycle: u8,
    pub cvl_vs_dadn: f64,
    pub fcl_vs_dadn: f64,
    pub cvl_vs_1bit: f64,
    pub fcl_vs_1bit: f64,
}

/// Runs TRT with `arch.bits_per_cycle` bits per cycle (precisions round up to
/// a multiple of it) and compares against the baseline and 1-bit TRT.
pub fn simulate_trt2b(
    net: &NetworkSpec,
    profile: &PrecisionProfile,
    arch: &ArchConfig,
) -> Result<MultiBitComparison> {
    let multi = simulate_network(net, profile, arch, Engine::Trt)?;
    let one = simulate_network(net, profile, &arch.with_bits_per_cycle(1), Engine::Trt)?;
    let rel = |kind| {
        (
            multi.speedup(Some(kind)) - 1.0,
            one.total_cycles(Some(kind)) as f64 / multi.total_cycles(Some(kind)) as f64 - 1.0,
        )
    };
    let (cvl_vs_dadn, cvl_vs_1bit) = rel(LayerKind::Conv);
    let (fcl_vs_dadn, fcl_vs_1bit) = rel(LayerKind::FullyConnected);
    Ok(MultiBitComparison {
        network: net.name.clone(),
        bits_per_cycle: arch.bits_per_cycle,
        cvl_vs_dadn,
        fcl_vs_dadn,
        cvl_vs_1bit,
        fcl_vs_1bit,
    })
}

pub fn geomean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v.ln(), n + 1));
    if n == 0 {
        f64::NAN
    } else {
        (sum / n as f64).exp()
    }
}
