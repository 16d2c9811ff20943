//! Layer-level functional models for the three engines.
//!
//! The bit-parallel baseline multiplies 16-lane bricks directly. The
//! bit-serial engines walk the same loop nest as the hardware schedule:
//! filters map to SIP rows, windows (convolutions) or cascade slices
//! (fully-connected layers) map to SIP columns, and every product is formed
//! one activation slice at a time through [`SipState`].

use crate::error::{Error, Result};
use crate::fixedpoint::{rescale, FixedPointFormat, FixedPointTensor};
use crate::functional::arch::{ArchConfig, Engine};
use crate::functional::layer::{LayerKind, LayerSpec};
use crate::functional::sip::{activation_slice, cascade_reduce, weight_slice_msb_first, SipState};
use crate::netmodel::LayerPrecision;

/// Deliberate datapath defects used to check that the equivalence tests
/// actually detect broken hardware.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// The negation block never fires, so the activation sign bit is added
    /// instead of subtracted.
    NoMsbNegation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Cascade slices per output for bit-serial fully-connected layers;
    /// `None` picks the default for the layer size.
    pub cascade: Option<usize>,
    pub fault: Option<Fault>,
}

/// Activity observed while running one layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FunctionalStats {
    /// Clock steps spent multiplying, excluding exposed weight loading and
    /// cascade reduction.
    pub compute_steps: u64,
    /// `sip_cycle` (or bit-parallel brick product) invocations on active units.
    pub unit_cycles: u64,
    /// Serial weight-shift steps, including those hidden behind compute.
    pub weight_shift_steps: u64,
    pub cascade_cycles: u64,
    /// Cascade slices used for a fully-connected layer (1 otherwise).
    pub cascade_slices: usize,
}

/// Raw 32-bit accumulators for every output of a layer, in `[y][x][filter]`
/// order, with the binary point at `frac_bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerRun {
    pub shape: Vec<usize>,
    pub acc: Vec<i32>,
    pub frac_bits: u8,
    pub stats: FunctionalStats,
}

impl LayerRun {
    /// Rounds and saturates the accumulators into `format`.
    pub fn to_tensor(&self, format: FixedPointFormat) -> FixedPointTensor {
        let data = self
            .acc
            .iter()
            .map(|&v| rescale(v as i64, self.frac_bits, format))
            .collect();
        FixedPointTensor::new(self.shape.clone(), data, format)
    }
}

/// Largest power of two no greater than `min(16, columns, sips / outputs)`,
/// floored at 1.
pub fn default_cascade(outputs: usize, arch: &ArchConfig) -> usize {
    let limit = (arch.total_sips() / outputs.max(1)).min(16).min(arch.columns_per_tile);
    if limit == 0 {
        1
    } else {
        1 << limit.ilog2()
    }
}

/// Convolution geometry with fully-connected layers folded into a single
/// 1x1 window over a 1x1xN input.
#[derive(Clone, Copy, Debug)]
struct Geometry {
    in_x: usize,
    in_y: usize,
    in_c: usize,
    kx: usize,
    ky: usize,
    stride: usize,
    pad: usize,
    out_x: usize,
    out_y: usize,
    filters: usize,
    groups: usize,
    cpg: usize,
    fpg: usize,
}

impl Geometry {
    fn of(layer: &LayerSpec) -> Self {
        let out = layer.output_dims();
        match layer.kind {
            LayerKind::FullyConnected => {
                let n = layer.input.volume();
                Self {
                    in_x: 1,
                    in_y: 1,
                    in_c: n,
                    kx: 1,
                    ky: 1,
                    stride: 1,
                    pad: 0,
                    out_x: 1,
                    out_y: 1,
                    filters: layer.filters,
                    groups: 1,
                    cpg: n,
                    fpg: layer.filters,
                }
            }
            _ => Self {
                in_x: layer.input.x,
                in_y: layer.input.y,
                in_c: layer.input.c,
                kx: layer.kernel_x,
                ky: layer.kernel_y,
                stride: layer.stride,
                pad: layer.pad,
                out_x: out.x,
                out_y: out.y,
                filters: layer.filters,
                groups: layer.groups,
                cpg: layer.channels_per_group(),
                fpg: layer.filters_per_group(),
            },
        }
    }

    fn windows(&self) -> usize {
        self.out_x * self.out_y
    }

    /// Brick index space per window: kernel position major, channel brick minor.
    fn bricks(&self, brick: usize) -> usize {
        self.kx * self.ky * self.cpg.div_ceil(brick)
    }

    /// Copies activation brick `b` of window `w` for group `g` into `out`,
    /// zero-filling padding and lanes past the group's channels.
    fn gather_acts(&self, acts: &[i32], g: usize, w: usize, b: usize, out: &mut [i32]) {
        let brick = out.len();
        let cb_count = self.cpg.div_ceil(brick);
        let (pos, cb) = (b / cb_count, b % cb_count);
        let (ky, kx) = (pos / self.kx, pos % self.kx);
        let (oy, ox) = (w / self.out_x, w % self.out_x);
        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
        let ix = (ox * self.stride + kx) as isize - self.pad as isize;
        out.fill(0);
        if iy < 0 || ix < 0 || iy as usize >= self.in_y || ix as usize >= self.in_x {
            return;
        }
        let c0 = cb * brick;
        let n = brick.min(self.cpg - c0);
        let base = (iy as usize * self.in_x + ix as usize) * self.in_c + g * self.cpg + c0;
        out[..n].copy_from_slice(&acts[base..base + n]);
    }

    /// Copies weight brick `b` of filter `f` (global index) into `out`.
    fn gather_weights(&self, weights: &[i32], f: usize, b: usize, out: &mut [i32]) {
        let brick = out.len();
        let cb_count = self.cpg.div_ceil(brick);
        let (pos, cb) = (b / cb_count, b % cb_count);
        let c0 = cb * brick;
        let n = brick.min(self.cpg - c0);
        let base = (f * self.kx * self.ky + pos) * self.cpg + c0;
        out.fill(0);
        out[..n].copy_from_slice(&weights[base..base + n]);
    }

    fn out_index(&self, w: usize, f: usize) -> usize {
        w * self.filters + f
    }
}

fn check_inputs(
    layer: &LayerSpec,
    weights: &FixedPointTensor,
    acts: &FixedPointTensor,
    prec: LayerPrecision,
) -> Result<()> {
    if !layer.is_compute() {
        return Err(Error::UnsupportedKind {
            layer: layer.name.clone(),
            what: "inner-product engines",
        });
    }
    layer.validate()?;
    if acts.shape() != layer.input.shape().as_slice() {
        return Err(Error::shape(
            &layer.name,
            format!("activation shape {:?}, expected {:?}", acts.shape(), layer.input.shape()),
        ));
    }
    if weights.shape() != layer.weight_shape().as_slice() {
        return Err(Error::shape(
            &layer.name,
            format!("weight shape {:?}, expected {:?}", weights.shape(), layer.weight_shape()),
        ));
    }
    for (role, data, bits) in [
        ("activation", acts.data(), prec.pa),
        ("weight", weights.data(), prec.pw),
    ] {
        if !(1..=16).contains(&bits) {
            return Err(Error::Profile(format!(
                "layer `{}`: {role} precision {bits} outside 1..=16",
                layer.name
            )));
        }
        let f = FixedPointFormat::integer(bits);
        if let Some(&v) = data.iter().find(|&&v| !f.contains(v)) {
            return Err(Error::Precision {
                layer: layer.name.clone(),
                role,
                value: v,
                bits,
            });
        }
    }
    Ok(())
}

/// Runs a convolutional or fully-connected layer on `engine` and returns the
/// raw accumulators. Outputs are bit-identical across engines; only the
/// activity statistics differ.
pub fn run_layer_functional(
    layer: &LayerSpec,
    weights: &FixedPointTensor,
    acts: &FixedPointTensor,
    prec: LayerPrecision,
    arch: &ArchConfig,
    engine: Engine,
    opts: RunOptions,
) -> Result<LayerRun> {
    arch.validate()?;
    check_inputs(layer, weights, acts, prec)?;
    let geo = Geometry::of(layer);
    let fc = layer.kind == LayerKind::FullyConnected;
    let (acc, stats) = match (engine, fc) {
        (Engine::Dadn, _) | (Engine::Str, true) => run_parallel(&geo, weights.data(), acts.data(), arch)?,
        (Engine::Str, false) | (Engine::Trt, false) => {
            run_serial_conv(&geo, weights.data(), acts.data(), prec, arch, opts)?
        }
        (Engine::Trt, true) => run_serial_fc(&geo, weights.data(), acts.data(), prec, arch, opts)?,
    };
    let out = layer.output_dims();
    Ok(LayerRun {
        shape: out.shape(),
        acc,
        frac_bits: acts.format().frac_bits() + weights.format().frac_bits(),
        stats,
    })
}

fn accumulate(acc: &mut i32, delta: i64) -> Result<()> {
    let sum = *acc as i64 + delta;
    *acc = i32::try_from(sum).map_err(|_| Error::Overflow(sum))?;
    Ok(())
}

/// Bit-parallel tile: 16 filter lanes each take the dot product of a 16-wide
/// weight brick with the broadcast activation brick every cycle.
fn run_parallel(
    geo: &Geometry,
    weights: &[i32],
    acts: &[i32],
    arch: &ArchConfig,
) -> Result<(Vec<i32>, FunctionalStats)> {
    let bs = arch.brick_size;
    let fpc = arch.filters_per_chip();
    let bricks = geo.bricks(bs);
    let mut out = vec![0i32; geo.windows() * geo.filters];
    let mut stats = FunctionalStats {
        cascade_slices: 1,
        ..Default::default()
    };
    let mut a = vec![0; bs];
    let mut wbuf = vec![0; bs];
    for g in 0..geo.groups {
        for f0 in (0..geo.fpg).step_by(fpc) {
            let fend = (f0 + fpc).min(geo.fpg);
            for w in 0..geo.windows() {
                for b in 0..bricks {
                    geo.gather_acts(acts, g, w, b, &mut a);
                    stats.compute_steps += 1;
                    for fl in f0..fend {
                        let f = g * geo.fpg + fl;
                        geo.gather_weights(weights, f, b, &mut wbuf);
                        let dot: i64 = wbuf.iter().zip(&a).map(|(&x, &y)| x as i64 * y as i64).sum();
                        accumulate(&mut out[geo.out_index(w, f)], dot)?;
                        stats.unit_cycles += 1;
                    }
                }
            }
        }
    }
    Ok((out, stats))
}

fn slices_of(acts: &[i32], t: u32, b: u8, out: &mut [u8]) {
    for (s, &a) in out.iter_mut().zip(acts) {
        *s = activation_slice(a, t, b);
    }
}

/// Bit-serial convolution: each SIP row holds one filter's weights (loaded in
/// parallel and reused across the row), each column one window; activation
/// slices stream LSB first.
fn run_serial_conv(
    geo: &Geometry,
    weights: &[i32],
    acts: &[i32],
    prec: LayerPrecision,
    arch: &ArchConfig,
    opts: RunOptions,
) -> Result<(Vec<i32>, FunctionalStats)> {
    let bs = arch.brick_size;
    let b = arch.bits_per_cycle;
    let fpc = arch.filters_per_chip();
    let cols = arch.columns_per_tile;
    let bricks = geo.bricks(bs);
    let slices = arch.slices(prec.pa);
    let negate = opts.fault != Some(Fault::NoMsbNegation);
    let mut out = vec![0i32; geo.windows() * geo.filters];
    let mut stats = FunctionalStats {
        cascade_slices: 1,
        ..Default::default()
    };
    let mut wbuf = vec![0; bs];
    let mut abuf = vec![0; bs];
    let mut sl = vec![0u8; bs];
    let no_msb = vec![false; bs];
    let msb = vec![negate; bs];

    for g in 0..geo.groups {
        for f0 in (0..geo.fpg).step_by(fpc) {
            let rows: Vec<usize> = (f0..(f0 + fpc).min(geo.fpg)).map(|fl| g * geo.fpg + fl).collect();
            for w0 in (0..geo.windows()).step_by(cols) {
                let wins: Vec<usize> = (w0..(w0 + cols).min(geo.windows())).collect();
                let mut grid: Vec<SipState> = (0..rows.len() * wins.len())
                    .map(|_| SipState::new(bs, b))
                    .collect();
                let mut col_acts: Vec<Vec<i32>> = vec![vec![0; bs]; wins.len()];
                for brick in 0..bricks {
                    for (c, &w) in wins.iter().enumerate() {
                        geo.gather_acts(acts, g, w, brick, &mut abuf);
                        col_acts[c].copy_from_slice(&abuf);
                    }
                    for (r, &f) in rows.iter().enumerate() {
                        geo.gather_weights(weights, f, brick, &mut wbuf);
                        for c in 0..wins.len() {
                            grid[r * wins.len() + c].load_weights_parallel(&wbuf)?;
                        }
                    }
                    for t in 0..slices {
                        let flags = if t + 1 == slices { &msb } else { &no_msb };
                        for (c, ca) in col_acts.iter().enumerate() {
                            slices_of(ca, t, b, &mut sl);
                            for r in 0..rows.len() {
                                grid[r * wins.len() + c].cycle(&sl, t * b as u32, flags)?;
                            }
                        }
                        stats.compute_steps += 1;
                        stats.unit_cycles += (rows.len() * wins.len()) as u64;
                    }
                }
                for (r, &f) in rows.iter().enumerate() {
                    for (c, &w) in wins.iter().enumerate() {
                        out[geo.out_index(w, f)] = grid[r * wins.len() + c].or_acc();
                    }
                }
            }
        }
    }
    Ok((out, stats))
}

/// Bit-serial fully-connected layer. Each output is sliced across `np`
/// neighbouring SIPs of a row; SIP `s` of a slice group handles input bricks
/// `s, s + np, ...`. Weights stream MSB first into the SWRs while the
/// previous brick wave multiplies out of the WRs, and the `np` partials are
/// reduced over the daisy chain at the end of each output wave.
fn run_serial_fc(
    geo: &Geometry,
    weights: &[i32],
    acts: &[i32],
    prec: LayerPrecision,
    arch: &ArchConfig,
    opts: RunOptions,
) -> Result<(Vec<i32>, FunctionalStats)> {
    let bs = arch.brick_size;
    let b = arch.bits_per_cycle;
    let outputs = geo.filters;
    let np = opts.cascade.unwrap_or_else(|| default_cascade(outputs, arch));
    if !(1..=16).contains(&np) || !np.is_power_of_two() || np > arch.columns_per_tile {
        return Err(Error::Cascade(np));
    }
    let slots = arch.total_sips() / np;
    let nb = geo.cpg.div_ceil(bs);
    let waves = nb.div_ceil(np);
    let sa = arch.slices(prec.pa);
    let pw_eff = arch.effective_precision(prec.pw);
    let sw = arch.slices(prec.pw);
    let negate = opts.fault != Some(Fault::NoMsbNegation);

    let mut out = vec![0i32; outputs];
    let mut stats = FunctionalStats {
        cascade_slices: np,
        ..Default::default()
    };
    let mut wbuf = vec![0; bs];
    let mut abuf = vec![0; bs];
    let mut sl = vec![0u8; bs];
    let mut wsl = vec![0u8; bs];
    let no_msb = vec![false; bs];
    let msb = vec![negate; bs];

    // Brick handled by slice `s` during wave `k`, if any.
    let brick_at = |k: usize, s: usize| {
        let idx = k * np + s;
        (idx < nb).then_some(idx)
    };

    for o0 in (0..outputs).step_by(slots) {
        let outs: Vec<usize> = (o0..(o0 + slots).min(outputs)).collect();
        let mut sips: Vec<SipState> = (0..outs.len() * np).map(|_| SipState::new(bs, b)).collect();

        let mut shift_wave = |sips: &mut [SipState], k: usize, step: u32| -> Result<()> {
            for (i, &o) in outs.iter().enumerate() {
                for s in 0..np {
                    match brick_at(k, s) {
                        Some(br) => geo.gather_weights(weights, o, br, &mut wbuf),
                        None => wbuf.fill(0),
                    }
                    for (dst, &w) in wsl.iter_mut().zip(&wbuf) {
                        *dst = weight_slice_msb_first(w, step, pw_eff, b);
                    }
                    sips[i * np + s].shift_weights(&wsl, step == 0)?;
                }
            }
            Ok(())
        };

        // The first weight set is exposed; every later one overlaps compute.
        for step in 0..sw {
            shift_wave(&mut sips, 0, step)?;
            stats.weight_shift_steps += 1;
        }
        sips.iter_mut().for_each(SipState::copy_swr_to_wr);

        for k in 0..waves {
            let mut slice_acts: Vec<Option<Vec<i32>>> = Vec::with_capacity(np);
            for s in 0..np {
                slice_acts.push(brick_at(k, s).map(|br| {
                    geo.gather_acts(acts, 0, 0, br, &mut abuf);
                    abuf.clone()
                }));
            }
            for step in 0..sa.max(sw) {
                if step < sa {
                    let flags = if step + 1 == sa { &msb } else { &no_msb };
                    for (s, sa_acts) in slice_acts.iter().enumerate() {
                        let Some(a) = sa_acts else { continue };
                        slices_of(a, step, b, &mut sl);
                        for i in 0..outs.len() {
                            sips[i * np + s].cycle(&sl, step * b as u32, flags)?;
                            stats.unit_cycles += 1;
                        }
                    }
                }
                if step < sw && k + 1 < waves {
                    shift_wave(&mut sips, k + 1, step)?;
                    stats.weight_shift_steps += 1;
                }
                stats.compute_steps += 1;
            }
            if k + 1 < waves {
                sips.iter_mut().for_each(SipState::copy_swr_to_wr);
            }
        }

        let mut partials = vec![0i32; np];
        for (i, &o) in outs.iter().enumerate() {
            for (s, p) in partials.iter_mut().enumerate() {
                *p = sips[i * np + s].or_acc();
            }
            out[o] = cascade_reduce(&partials)?.0;
        }
        if np > 1 {
            stats.cascade_cycles += np as u64;
        }
    }
    Ok((out, stats))
}
