//! Signed fixed-point formats and integer tensors.
//!
//! Every value that flows through the simulator is a raw two's-complement
//! integer plus a [`FixedPointFormat`] saying how many bits are significant and
//! where the binary point sits. Quantization rounds to nearest, ties to even,
//! and saturates at the representable range.

use std::fmt;

/// Widest format the datapath supports.
pub const MAX_BITS: u8 = 16;

/// A signed fixed-point format: `total_bits` two's-complement bits of which
/// `frac_bits` are fractional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    total_bits: u8,
    frac_bits: u8,
}

impl FixedPointFormat {
    /// Panics unless `1 <= total_bits <= 16` and `frac_bits <= total_bits`.
    pub fn new(total_bits: u8, frac_bits: u8) -> Self {
        Self::try_new(total_bits, frac_bits).unwrap_or_else(|| {
            panic!("invalid fixed-point format {{{total_bits},{frac_bits}}}")
        })
    }

    pub fn try_new(total_bits: u8, frac_bits: u8) -> Option<Self> {
        if (1..=MAX_BITS).contains(&total_bits) && frac_bits <= total_bits {
            Some(Self {
                total_bits,
                frac_bits,
            })
        } else {
            None
        }
    }

    /// Integer format (no fractional bits).
    pub fn integer(total_bits: u8) -> Self {
        Self::new(total_bits, 0)
    }

    /// Weight format covering [-1, 1): one sign bit, the rest fractional.
    pub fn unit_range(total_bits: u8) -> Self {
        Self::new(total_bits, total_bits - 1)
    }

    pub fn total_bits(&self) -> u8 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u8 {
        self.frac_bits
    }

    /// Always true; the datapath only handles two's-complement values.
    pub fn signed(&self) -> bool {
        true
    }

    pub fn min_raw(&self) -> i32 {
        -(1i32 << (self.total_bits - 1))
    }

    pub fn max_raw(&self) -> i32 {
        (1i32 << (self.total_bits - 1)) - 1
    }

    pub fn contains(&self, raw: i32) -> bool {
        (self.min_raw()..=self.max_raw()).contains(&raw)
    }

    /// Value of one least-significant bit.
    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.total_bits - self.frac_bits, self.frac_bits)
    }
}

/// Rounds `value * 2^frac_bits` to nearest (ties to even) and saturates.
///
/// ```
/// use tartan::fixedpoint::{quantize, FixedPointFormat};
/// let q = FixedPointFormat::new(8, 4);
/// assert_eq!(quantize(0.09375, q), 2); // 1.5 ties to 2
/// assert_eq!(quantize(100.0, q), 127);
/// ```
pub fn quantize(value: f64, format: FixedPointFormat) -> i32 {
    if value.is_nan() {
        return 0;
    }
    let scaled = (value * (format.frac_bits as f64).exp2()).round_ties_even();
    scaled.clamp(format.min_raw() as f64, format.max_raw() as f64) as i32
}

pub fn dequantize(raw: i32, format: FixedPointFormat) -> f64 {
    raw as f64 * format.resolution()
}

/// Bit `k` of the two's-complement encoding of `raw` in `format.total_bits` bits.
pub fn bit_of(raw: i32, k: u8, format: FixedPointFormat) -> u8 {
    assert!(
        k < format.total_bits,
        "bit index {k} out of range for {}-bit format",
        format.total_bits
    );
    ((raw >> k) & 1) as u8
}

/// Interprets the low `bits` bits of `pattern` as a two's-complement number.
pub fn sign_extend(pattern: i32, bits: u8) -> i32 {
    debug_assert!((1..=32).contains(&bits));
    let shift = 32 - bits as u32;
    (pattern << shift) >> shift
}

/// Moves `raw` from `from` to `to`: shifts the binary point (round half to
/// even when dropping bits), then saturates.
pub fn rescale(raw: i64, from_frac: u8, to: FixedPointFormat) -> i32 {
    let to_frac = to.frac_bits as i32;
    let delta = from_frac as i32 - to_frac;
    let v = if delta <= 0 {
        raw.checked_shl((-delta) as u32)
            .filter(|v| v >> (-delta) as u32 == raw)
            .unwrap_or(if raw < 0 { i64::MIN } else { i64::MAX })
    } else {
        shift_round_even(raw, delta as u32)
    };
    v.clamp(to.min_raw() as i64, to.max_raw() as i64) as i32
}

fn shift_round_even(raw: i64, shift: u32) -> i64 {
    if shift >= 63 {
        return 0;
    }
    let floor = raw >> shift;
    let rem = raw - (floor << shift);
    let half = 1i64 << (shift - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// A dense tensor of raw fixed-point integers, row-major over `shape`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPointTensor {
    shape: Vec<usize>,
    data: Vec<i32>,
    format: FixedPointFormat,
}

impl FixedPointTensor {
    /// Panics if the element count does not match `shape` or any element does
    /// not fit the format.
    pub fn new(shape: Vec<usize>, data: Vec<i32>, format: FixedPointFormat) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor data length does not match shape {shape:?}"
        );
        if let Some(bad) = data.iter().find(|&&v| !format.contains(v)) {
            panic!("raw value {bad} does not fit {format}");
        }
        Self {
            shape,
            data,
            format,
        }
    }

    pub fn zeros(shape: Vec<usize>, format: FixedPointFormat) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![0; n], format)
    }

    pub fn from_real(shape: Vec<usize>, values: &[f64], format: FixedPointFormat) -> Self {
        let data = values.iter().map(|&v| quantize(v, format)).collect();
        Self::new(shape, data, format)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.data.iter().map(|&r| dequantize(r, self.format)).collect()
    }

    pub fn into_data(self) -> Vec<i32> {
        self.data
    }
}

/// Re-rounds and saturates every element into `new_format`.
pub fn requantize_tensor(t: &FixedPointTensor, new_format: FixedPointFormat) -> FixedPointTensor {
    if t.format == new_format {
        return t.clone();
    }
    let data = t
        .data
        .iter()
        .map(|&r| rescale(r as i64, t.format.frac_bits, new_format))
        .collect();
    FixedPointTensor::new(t.shape.clone(), data, new_format)
}
