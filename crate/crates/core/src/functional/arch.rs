use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which accelerator a simulation models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    /// Bit-parallel baseline: 16 filters x 16 lanes of 16-bit multipliers per tile.
    Dadn,
    /// Bit-serial activations for convolutions only; fully-connected layers run
    /// at baseline speed with parallel weight loads.
    Str,
    /// Bit-serial activations for both layer types, serial weight loading and
    /// cascaded SIP rows for fully-connected layers.
    Trt,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Dadn, Engine::Str, Engine::Trt];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Dadn => "dadn",
            Engine::Str => "str",
            Engine::Trt => "trt",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dadn" => Ok(Engine::Dadn),
            "str" => Ok(Engine::Str),
            "trt" => Ok(Engine::Trt),
            other => Err(Error::Usage(format!(
                "unknown engine `{other}` (expected dadn, str or trt)"
            ))),
        }
    }
}

/// Chip organisation shared by all engines.
///
/// The baseline chip has 16 tiles, each handling 16 filters. A bit-serial tile
/// arranges its SIPs as `filters_per_tile` rows by `columns_per_tile` columns;
/// processing `bits_per_cycle` activation bits at once halves the columns for
/// every doubling so the tile keeps the baseline's 256 products per cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArchConfig {
    pub brick_size: usize,
    pub filters_per_tile: usize,
    pub columns_per_tile: usize,
    pub tiles: usize,
    pub bits_per_cycle: u8,
    pub base_precision: u8,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            brick_size: 16,
            filters_per_tile: 16,
            columns_per_tile: 16,
            tiles: 16,
            bits_per_cycle: 1,
            base_precision: 16,
        }
    }
}

impl ArchConfig {
    /// Same chip processing `bits` activation bits per cycle with
    /// `16 / bits` SIP columns per tile.
    pub fn with_bits_per_cycle(mut self, bits: u8) -> Self {
        self.bits_per_cycle = bits;
        self.columns_per_tile = 16 / bits.max(1) as usize;
        self
    }

    pub fn two_bit() -> Self {
        Self::default().with_bits_per_cycle(2)
    }

    pub fn validate(&self) -> Result<()> {
        if ![1, 2, 4, 8, 16].contains(&self.bits_per_cycle) {
            return Err(Error::Arch(format!(
                "bits_per_cycle must be one of 1, 2, 4, 8, 16 (got {})",
                self.bits_per_cycle
            )));
        }
        if self.columns_per_tile * self.bits_per_cycle as usize != 16 {
            return Err(Error::Arch(format!(
                "columns_per_tile ({}) x bits_per_cycle ({}) must equal 16",
                self.columns_per_tile, self.bits_per_cycle
            )));
        }
        if self.brick_size == 0 || self.filters_per_tile == 0 || self.tiles == 0 {
            return Err(Error::Arch(
                "brick_size, filters_per_tile and tiles must be positive".into(),
            ));
        }
        if !(1..=16).contains(&self.base_precision) {
            return Err(Error::Arch("base_precision must be in 1..=16".into()));
        }
        Ok(())
    }

    /// Filters processed concurrently by the whole chip.
    pub fn filters_per_chip(&self) -> usize {
        self.filters_per_tile * self.tiles
    }

    pub fn total_sips(&self) -> usize {
        self.filters_per_chip() * self.columns_per_tile
    }

    /// Cycles needed to stream a `precision`-bit value `bits_per_cycle` bits at a time.
    pub fn slices(&self, precision: u8) -> u32 {
        (precision as u32).div_ceil(self.bits_per_cycle as u32)
    }

    /// Precision rounded up to a multiple of `bits_per_cycle`.
    pub fn effective_precision(&self, precision: u8) -> u8 {
        (self.slices(precision) * self.bits_per_cycle as u32) as u8
    }
}
