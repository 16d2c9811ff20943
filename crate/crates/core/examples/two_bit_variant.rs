//! Two activation bits per cycle on half the SIP columns, against the
//! baseline and the 1-bit design.
//!
//! cargo run --example two_bit_variant

use tartan::functional::ArchConfig;
use tartan::netmodel::{fixture_network, fixture_profile, profile_name, IMAGENET_NETWORKS};
use tartan::timing::simulate_trt2b;

fn main() -> tartan::Result<()> {
    let arch = ArchConfig::two_bit();
    println!("{:<8} {:>12} {:>12} {:>12} {:>12}", "network", "FCL vs base", "FCL vs 1b", "CVL vs base", "CVL vs 1b");
    for name in IMAGENET_NETWORKS {
        let net = fixture_network(name)?;
        let m = simulate_trt2b(&net, &fixture_profile(&net, &profile_name(name, "100"))?, &arch)?;
        let pct = |v: f64| format!("{:+.2}%", 100.0 * v);
        println!(
            "{name:<8} {:>12} {:>12} {:>12} {:>12}",
            pct(m.fcl_vs_dadn),
            pct(m.fcl_vs_1bit),
            pct(m.cvl_vs_dadn),
            pct(m.cvl_vs_1bit)
        );
    }
    Ok(())
}
