//! Prints the per-network ideal-speedup CSV for every shipped ImageNet
//! profile: MAC-weighted `16 / p` per layer group.
//!
//! cargo run --example ideal_speedups

use tartan::explorer::ideal_speedup_csv;
use tartan::netmodel::{fixture_network, fixture_profile, profile_name, ACCURACY_LEVELS, IMAGENET_NETWORKS};

fn main() -> tartan::Result<()> {
    let mut owned = Vec::new();
    for level in ACCURACY_LEVELS {
        for name in IMAGENET_NETWORKS {
            let net = fixture_network(name)?;
            let profile = fixture_profile(&net, &profile_name(name, level))?;
            owned.push((net, profile));
        }
    }
    let rows: Vec<_> = owned.iter().map(|(n, p)| (n, p)).collect();
    print!("{}", ideal_speedup_csv(&rows, 16));
    Ok(())
}
