//! Simulates the four ImageNet fixtures on the baseline, STR and TRT and
//! prints per-group speedups with their geomeans.
//!
//! cargo run --example simulate_network [-- 99]

use tartan::functional::{ArchConfig, Engine, LayerKind};
use tartan::netmodel::{fixture_network, fixture_profile, profile_name, IMAGENET_NETWORKS};
use tartan::timing::{geomean, simulate_network};

fn main() -> tartan::Result<()> {
    let level = std::env::args().nth(1).unwrap_or_else(|| "100".into());
    let arch = ArchConfig::default();
    println!("accuracy target {level}%");
    println!("{:<8} {:>6} {:>8} {:>8} {:>8} {:>9}", "network", "engine", "CVL", "FCL", "all", "dispatch");
    for engine in [Engine::Str, Engine::Trt] {
        let mut cvl = Vec::new();
        let mut fcl = Vec::new();
        for name in IMAGENET_NETWORKS {
            let net = fixture_network(name)?;
            let profile = fixture_profile(&net, &profile_name(name, &level))?;
            let r = simulate_network(&net, &profile, &arch, engine)?;
            let (c, f) = (r.speedup(Some(LayerKind::Conv)), r.speedup(Some(LayerKind::FullyConnected)));
            println!(
                "{:<8} {:>6} {:>8.3} {:>8.3} {:>8.3} {:>8.2}%",
                name,
                engine,
                c,
                f,
                r.speedup(None),
                100.0 * r.dispatch_overhead_fraction(Some(LayerKind::FullyConnected))
            );
            cvl.push(c);
            fcl.push(f);
        }
        println!("{:<8} {:>6} {:>8.3} {:>8.3}", "geomean", engine, geomean(cvl), geomean(fcl));
    }
    Ok(())
}
