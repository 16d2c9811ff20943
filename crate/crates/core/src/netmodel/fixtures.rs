use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::netmodel::network::{load_network, NetworkSpec};
use crate::netmodel::profile::{load_profile, PrecisionProfile};

/// Environment variable that overrides the fixture directory.
pub const FIXTURE_ENV: &str = "TARTAN_FIXTURES";

/// The four ImageNet classifiers shipped as layer-dimension fixtures.
pub const IMAGENET_NETWORKS: [&str; 4] = ["alexnet", "vgg_s", "vgg_m", "vgg_19"];

/// Accuracy targets with shipped profiles for every ImageNet fixture.
pub const ACCURACY_LEVELS: [&str; 2] = ["100", "99"];

pub fn fixture_dir() -> PathBuf {
    std::env::var_os(FIXTURE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

fn resolve(name: &str, sub: &str, ext: &str) -> PathBuf {
    let p = Path::new(name);
    if p.extension().is_some() || p.components().count() > 1 {
        p.to_path_buf()
    } else {
        fixture_dir().join(sub).join(format!("{name}.{ext}"))
    }
}

/// A bare name such as `alexnet` maps into the fixture directory; anything
/// that looks like a path is used as is.
pub fn resolve_network(name: &str) -> PathBuf {
    resolve(name, "networks", "net")
}

pub fn resolve_profile(name: &str) -> PathBuf {
    resolve(name, "profiles", "profile")
}

pub fn fixture_network(name: &str) -> Result<NetworkSpec> {
    load_network(resolve_network(name))
}

pub fn fixture_profile(net: &NetworkSpec, name: &str) -> Result<PrecisionProfile> {
    load_profile(resolve_profile(name), net)
}

pub fn profile_name(net: &str, accuracy: &str) -> String {
    format!("{net}-{accuracy}")
}
