//! Slices a fully-connected layer with few outputs across several SIPs per
//! output and shows that results are unchanged while cycles drop.
//!
//! cargo run --example cascade

use rand::{Rng, SeedableRng};
use tartan::fixedpoint::{FixedPointFormat, FixedPointTensor};
use tartan::functional::{run_layer_functional, ArchConfig, Dims, Engine, LayerSpec, RunOptions};
use tartan::netmodel::LayerPrecision;
use tartan::timing::{cycles_trt_fcl, CascadePlan};

fn main() -> tartan::Result<()> {
    let arch = ArchConfig::default();
    let layer = LayerSpec::fully_connected("fc", Dims::new(1, 1, 1024), 100);
    let prec = LayerPrecision::joint(9);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let f = FixedPointFormat::integer(9);
    let w = (0..layer.weight_count()).map(|_| rng.gen_range(-40..=40)).collect();
    let a = (0..1024).map(|_| rng.gen_range(f.min_raw()..=f.max_raw())).collect();
    let weights = FixedPointTensor::new(layer.weight_shape(), w, FixedPointFormat::unit_range(9));
    let acts = FixedPointTensor::new(layer.input.shape(), a, f);

    let base = run_layer_functional(&layer, &weights, &acts, prec, &arch, Engine::Dadn, RunOptions::default())?;
    println!("{:>3} {:>8} {:>6} {:>8}", "np", "cycles", "idle", "exact");
    for np in [1, 2, 4, 8, 16] {
        let opts = RunOptions {
            cascade: Some(np),
            ..RunOptions::default()
        };
        let r = run_layer_functional(&layer, &weights, &acts, prec, &arch, Engine::Trt, opts)?;
        let t = cycles_trt_fcl(&layer, prec, &arch, CascadePlan { np })?;
        println!(
            "{np:>3} {:>8} {:>5.1}% {:>8}",
            t.total_cycles,
            100.0 * t.idle_sip_fraction,
            r.acc == base.acc
        );
    }
    Ok(())
}
