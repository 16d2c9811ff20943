//! Random engine-equivalence trials.
//!
//! Each trial draws a small layer, a small chip, precisions in `[2, 16]`,
//! one or two bits per cycle and (for fully-connected layers) a cascade
//! width, then checks that the bit-serial engines reproduce the bit-parallel
//! baseline exactly.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::fixedpoint::{FixedPointFormat, FixedPointTensor};
use crate::functional::{
    reference_layer, run_layer_functional, ArchConfig, Dims, Engine, Fault, LayerKind, LayerSpec, RunOptions,
};
use crate::netmodel::LayerPrecision;

#[derive(Clone, Debug)]
pub struct Case {
    pub layer: LayerSpec,
    pub arch: ArchConfig,
    pub precision: LayerPrecision,
    pub cascade: Option<usize>,
    pub weights: FixedPointTensor,
    pub acts: FixedPointTensor,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = &self.layer;
        if l.kind == LayerKind::FullyConnected {
            write!(f, "fc input {} outputs {}", l.input, l.filters)?;
        } else {
            write!(
                f,
                "conv input {} filters {} kernel {}x{} stride {} pad {} groups {}",
                l.input, l.filters, l.kernel_x, l.kernel_y, l.stride, l.pad, l.groups
            )?;
        }
        write!(
            f,
            "; Pa {} Pw {}; B {} brick {} tiles {}x{} rows; cascade {}",
            self.precision.pa,
            self.precision.pw,
            self.arch.bits_per_cycle,
            self.arch.brick_size,
            self.arch.tiles,
            self.arch.filters_per_tile,
            self.cascade.map_or("n/a".to_string(), |n| n.to_string())
        )
    }
}

/// Values in the `bits`-bit range, with extra weight on the extremes so the
/// sign-bit path is exercised often.
fn draw_value<R: Rng>(rng: &mut R, bits: u8) -> i32 {
    let f = FixedPointFormat::integer(bits);
    match rng.gen_range(0..10) {
        0 => f.min_raw(),
        1 => f.max_raw(),
        2 => -1,
        3 => 0,
        _ => rng.gen_range(f.min_raw()..=f.max_raw()),
    }
}

fn draw_layer<R: Rng>(rng: &mut R) -> LayerSpec {
    if rng.gen_bool(0.45) {
        let input = if rng.gen_bool(0.7) {
            Dims::new(1, 1, rng.gen_range(1..=300))
        } else {
            Dims::new(rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=24))
        };
        return LayerSpec::fully_connected("fc", input, rng.gen_range(1..=16));
    }
    let groups = *[1, 1, 1, 2].choose(rng).unwrap();
    let c = groups * rng.gen_range(1..=20);
    let filters = groups * rng.gen_range(1..=6);
    let x = rng.gen_range(1..=6);
    let y = rng.gen_range(1..=6);
    let pad = rng.gen_range(0..=1);
    let kernel = rng.gen_range(1..=3usize.min(x + 2 * pad).min(y + 2 * pad));
    let stride = rng.gen_range(1..=2);
    LayerSpec::conv("conv", Dims::new(x, y, c), filters, kernel, stride, pad).with_groups(groups)
}

/// Draws one trial. Weights are shrunk by arithmetic right shifts until no
/// partial sum can leave the 32-bit accumulator.
pub fn random_case<R: Rng>(rng: &mut R) -> Case {
    let b = if rng.gen_bool(0.5) { 1 } else { 2 };
    let arch = ArchConfig {
        brick_size: *[16, 16, 16, 8, 4].choose(rng).unwrap(),
        filters_per_tile: rng.gen_range(1..=4),
        tiles: rng.gen_range(1..=2),
        ..ArchConfig::default()
    }
    .with_bits_per_cycle(b);
    let layer = draw_layer(rng);
    let pa = rng.gen_range(2..=16);
    let pw = rng.gen_range(2..=16);
    let cascade = (layer.kind == LayerKind::FullyConnected).then(|| {
        let options: Vec<usize> = [1, 2, 4, 8, 16]
            .into_iter()
            .filter(|&np| np <= arch.columns_per_tile)
            .collect();
        *options.choose(rng).unwrap()
    });

    let mut w: Vec<i32> = (0..layer.weight_count()).map(|_| draw_value(rng, pw)).collect();
    let a: Vec<i32> = (0..layer.input.volume()).map(|_| draw_value(rng, pa)).collect();
    let terms = layer.terms_per_output();
    let a_bound = 1i64 << arch.effective_precision(pa);
    loop {
        let worst = w
            .chunks(terms)
            .map(|row| row.iter().map(|&v| (v as i64).abs()).sum::<i64>() * a_bound)
            .max()
            .unwrap_or(0);
        if worst < 1 << 31 {
            break;
        }
        w.iter_mut().for_each(|v| *v >>= 1);
    }
    let wf = FixedPointFormat::new(pw, rng.gen_range(0..=pw));
    let af = FixedPointFormat::new(pa, rng.gen_range(0..=pa));
    Case {
        weights: FixedPointTensor::new(layer.weight_shape(), w, wf),
        acts: FixedPointTensor::new(layer.input.shape(), a, af),
        layer,
        arch,
        precision: LayerPrecision::new(pa, pw),
        cascade,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub engine: Engine,
    pub index: usize,
    pub expected: i64,
    pub got: i64,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} output {} is {}, bit-parallel baseline gives {}",
            self.engine, self.index, self.got, self.expected
        )
    }
}

/// Runs every engine on `case`; `None` when all agree with the baseline and
/// the baseline agrees with the direct-loop reference.
pub fn check_case(case: &Case, fault: Option<Fault>) -> Result<Option<Mismatch>> {
    let run = |engine, fault| {
        let opts = RunOptions {
            cascade: case.cascade,
            fault,
        };
        run_layer_functional(&case.layer, &case.weights, &case.acts, case.precision, &case.arch, engine, opts)
    };
    let base = run(Engine::Dadn, None)?;
    let w: Vec<i64> = case.weights.data().iter().map(|&v| v as i64).collect();
    let a: Vec<i64> = case.acts.data().iter().map(|&v| v as i64).collect();
    let reference = reference_layer(&case.layer, &w, &a)?;
    if let Some(i) = (0..reference.len()).find(|&i| reference[i] != base.acc[i] as i64) {
        return Ok(Some(Mismatch {
            engine: Engine::Dadn,
            index: i,
            expected: reference[i],
            got: base.acc[i] as i64,
        }));
    }
    for engine in [Engine::Trt, Engine::Str] {
        let r = run(engine, fault)?;
        if let Some(i) = (0..r.acc.len()).find(|&i| r.acc[i] != base.acc[i]) {
            return Ok(Some(Mismatch {
                engine,
                index: i,
                expected: base.acc[i] as i64,
                got: r.acc[i] as i64,
            }));
        }
    }
    Ok(None)
}

/// Smallest failing variant reachable by shrinking the layer one dimension
/// at a time while keeping the values that remain in range.
pub fn minimize(case: &Case, fault: Option<Fault>) -> Case {
    let mut best = case.clone();
    loop {
        let mut improved = false;
        for candidate in shrink_candidates(&best) {
            if matches!(check_case(&candidate, fault), Ok(Some(_))) {
                best = candidate;
                improved = true;
                break;
            }
        }
        if !improved {
            return best;
        }
    }
}

fn shrink_candidates(case: &Case) -> Vec<Case> {
    let l = &case.layer;
    let mut out = Vec::new();
    let mut push = |layer: LayerSpec| {
        if layer.validate().is_err() {
            return;
        }
        let weights = take_prefix(&case.weights, layer.weight_shape(), l, &layer);
        let acts = slice_acts(&case.acts, l.input, layer.input);
        out.push(Case {
            layer,
            weights,
            acts,
            ..case.clone()
        });
    };
    if l.filters > l.groups {
        let mut s = l.clone();
        s.filters -= l.groups;
        push(s);
    }
    if l.kind == LayerKind::FullyConnected {
        let d = l.input;
        if d.volume() > 1 {
            let nd = if d.c > 1 {
                Dims::new(d.x, d.y, d.c - 1)
            } else if d.x > 1 {
                Dims::new(d.x - 1, d.y, d.c)
            } else {
                Dims::new(d.x, d.y - 1, d.c)
            };
            push(LayerSpec::fully_connected(&l.name, nd, l.filters));
        }
    } else {
        for nd in [
            Dims::new(l.input.x.saturating_sub(1), l.input.y, l.input.c),
            Dims::new(l.input.x, l.input.y.saturating_sub(1), l.input.c),
            Dims::new(l.input.x, l.input.y, l.input.c.saturating_sub(l.groups)),
        ] {
            if nd.volume() > 0 {
                let mut s = l.clone();
                s.input = nd;
                push(s);
            }
        }
    }
    out
}

fn slice_acts(t: &FixedPointTensor, from: Dims, to: Dims) -> FixedPointTensor {
    let mut data = Vec::with_capacity(to.volume());
    for y in 0..to.y {
        for x in 0..to.x {
            for c in 0..to.c {
                data.push(t.data()[(y * from.x + x) * from.c + c]);
            }
        }
    }
    FixedPointTensor::new(to.shape(), data, t.format())
}

/// Weights of the shrunk layer: the leading filters and, per group, the
/// leading channels of each kernel position.
fn take_prefix(t: &FixedPointTensor, shape: Vec<usize>, from: &LayerSpec, to: &LayerSpec) -> FixedPointTensor {
    let src = t.data();
    let mut data = Vec::with_capacity(shape.iter().product());
    match to.kind {
        LayerKind::FullyConnected => {
            let (fi, ti) = (from.input, to.input);
            for o in 0..to.filters {
                for y in 0..ti.y {
                    for x in 0..ti.x {
                        for c in 0..ti.c {
                            data.push(src[o * fi.volume() + (y * fi.x + x) * fi.c + c]);
                        }
                    }
                }
            }
        }
        _ => {
            let (fc, tc) = (from.channels_per_group(), to.channels_per_group());
            let (ffg, tfg) = (from.filters_per_group(), to.filters_per_group());
            for f in 0..to.filters {
                let src_f = (f / tfg) * ffg + f % tfg;
                for k in 0..to.kernel_x * to.kernel_y {
                    for c in 0..tc {
                        data.push(src[(src_f * from.kernel_x * from.kernel_y + k) * fc + c]);
                    }
                }
            }
        }
    }
    FixedPointTensor::new(shape, data, t.format())
}

/// Outcome of [`run_trials`].
#[derive(Clone, Debug)]
pub enum TrialOutcome {
    Passed { trials: u64 },
    Failed { trial: u64, seed: u64, case: Box<Case>, mismatch: Mismatch },
}

/// Runs `n` trials from `seed`; stops at the first mismatch and reports a
/// minimized repro.
pub fn run_trials(n: u64, seed: u64, fault: Option<Fault>) -> Result<TrialOutcome> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..n {
        let case = random_case(&mut rng);
        if check_case(&case, fault)?.is_some() {
            let small = minimize(&case, fault);
            let mismatch = check_case(&small, fault)?.expect("minimized case still fails");
            return Ok(TrialOutcome::Failed {
                trial,
                seed,
                case: Box::new(small),
                mismatch,
            });
        }
    }
    Ok(TrialOutcome::Passed { trials: n })
}
