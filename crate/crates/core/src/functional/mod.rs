//! Bit-exact datapath models.

pub mod arch;
pub mod engine;
pub mod layer;
pub mod pool;
pub mod reference;
pub mod sip;

pub use arch::{ArchConfig, Engine};
pub use engine::{default_cascade, run_layer_functional, Fault, FunctionalStats, LayerRun, RunOptions};
pub use layer::{Activation, Dims, LayerKind, LayerSpec};
pub use pool::{apply_pool_and_activation, relu};
pub use reference::reference_layer;
pub use sip::{cascade_reduce, SipState};
