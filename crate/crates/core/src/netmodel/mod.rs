//! Network and precision-profile descriptions, their text formats, and the
//! shipped fixtures.

pub mod fixtures;
pub mod network;
pub mod profile;
mod text;

pub use fixtures::{
    fixture_dir, fixture_network, fixture_profile, profile_name, resolve_network, resolve_profile,
    ACCURACY_LEVELS, FIXTURE_ENV, IMAGENET_NETWORKS,
};
pub use network::{load_network, save_network, NetworkSpec};
pub use profile::{load_profile, save_profile, LayerPrecision, PrecisionProfile, ProfileEntry};
