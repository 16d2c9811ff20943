//! Functional, timing and energy models of a bit-serial DNN accelerator
//! (TRT), its bit-parallel baseline (DaDN) and a convolution-only bit-serial
//! predecessor (STR), plus a per-layer precision explorer.
//!
//! Start with [`functional`] for bit-exact layer evaluation, [`timing`] for
//! cycle counts, [`energy`] for event-based energy ratios and [`explorer`] for
//! precision search.

pub mod error;
pub mod fixedpoint;
pub mod functional;
pub mod netmodel;
pub mod timing;
pub mod energy;
pub mod explorer;
pub mod cli;
pub mod verify;

pub use error::{Error, Result};
