//! Energy efficiency over the baseline from event counts and the shipped
//! calibration coefficients. The coefficients were fitted to reported
//! ratios, so these numbers are a consistency check rather than a
//! prediction.
//!
//! cargo run --example energy_efficiency

use tartan::energy::{count_events, report_efficiency, EnergyCoefficients};
use tartan::functional::{ArchConfig, Engine, LayerKind};
use tartan::netmodel::{fixture_network, fixture_profile, profile_name, IMAGENET_NETWORKS};

fn main() -> tartan::Result<()> {
    let c = EnergyCoefficients::calibration()?;
    let arch = ArchConfig::default();
    println!("{:<8} {:>6} {:>7} {:>7} {:>7}", "network", "engine", "CVL", "FCL", "all");
    for name in IMAGENET_NETWORKS {
        let net = fixture_network(name)?;
        let profile = fixture_profile(&net, &profile_name(name, "100"))?;
        let base = count_events(&net, &profile, &arch, Engine::Dadn)?;
        for engine in [Engine::Str, Engine::Trt] {
            let r = count_events(&net, &profile, &arch, engine)?;
            let eff = |k| report_efficiency(&r, &base, k, &c);
            println!(
                "{name:<8} {engine:>6} {:>7.3} {:>7.3} {:>7.3}",
                eff(Some(LayerKind::Conv))?,
                eff(Some(LayerKind::FullyConnected))?,
                eff(None)?
            );
        }
        let t = base.totals(Some(LayerKind::FullyConnected));
        println!("         baseline FCL: {} SB bits, {} NM bits read", t.sb_bits_read, t.nm_bits_read);
    }
    Ok(())
}
