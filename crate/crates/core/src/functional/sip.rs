//! Serial inner-product unit.
//!
//! A SIP holds a brick of 16-bit weights in its weight register (WR) and
//! multiplies them each cycle by a `B`-bit slice of a brick of activations:
//! AND gates form the partial products, a negation block flips the product of
//! the activation's most significant bit, and an adder tree plus shifter
//! accumulate into the output register (OR). A second, shift-loadable serial
//! weight register (SWR) lets the next weights stream in bit-serially while
//! the current ones are in use.

use crate::error::{Error, Result};
use crate::fixedpoint::sign_extend;

const REG_BITS: u8 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SipState {
    swr: Vec<i32>,
    wr: Vec<i32>,
    or_acc: i32,
    bits_per_cycle: u8,
}

impl SipState {
    pub fn new(brick_size: usize, bits_per_cycle: u8) -> Self {
        assert!((1..=REG_BITS).contains(&bits_per_cycle));
        Self {
            swr: vec![0; brick_size],
            wr: vec![0; brick_size],
            or_acc: 0,
            bits_per_cycle,
        }
    }

    pub fn brick_size(&self) -> usize {
        self.wr.len()
    }

    pub fn swr(&self) -> &[i32] {
        &self.swr
    }

    pub fn wr(&self) -> &[i32] {
        &self.wr
    }

    pub fn or_acc(&self) -> i32 {
        self.or_acc
    }

    pub fn reset_output(&mut self) {
        self.or_acc = 0;
    }

    fn check_len(&self, n: usize, what: &str) -> Result<()> {
        if n != self.wr.len() {
            return Err(Error::shape(
                "sip",
                format!("{what} brick has {n} lanes, SIP has {}", self.wr.len()),
            ));
        }
        Ok(())
    }

    /// Loads a whole brick of weights into WR in one step.
    pub fn load_weights_parallel(&mut self, weights: &[i32]) -> Result<()> {
        self.check_len(weights.len(), "weight")?;
        for (reg, &w) in self.wr.iter_mut().zip(weights) {
            if !(i16::MIN as i32..=i16::MAX as i32).contains(&w) {
                return Err(Error::Precision {
                    layer: "sip".into(),
                    role: "weight register",
                    value: w,
                    bits: REG_BITS,
                });
            }
            *reg = w;
        }
        Ok(())
    }

    /// Shifts one `B`-bit slice per lane into the SWR subregisters, most
    /// significant slice first. The first slice of a weight is sign-extended
    /// across the whole subregister so that a short weight ends up holding
    /// its full 16-bit two's-complement value.
    pub fn shift_weights(&mut self, slices: &[u8], first: bool) -> Result<()> {
        self.check_len(slices.len(), "weight slice")?;
        let b = self.bits_per_cycle as u32;
        let mask = (1u32 << b) - 1;
        for (reg, &s) in self.swr.iter_mut().zip(slices) {
            let s = (s as u32 & mask) as i32;
            *reg = if first {
                sign_extend(s, b as u8)
            } else {
                sign_extend((*reg << b) | s, REG_BITS)
            };
        }
        Ok(())
    }

    pub fn copy_swr_to_wr(&mut self) {
        self.wr.copy_from_slice(&self.swr);
    }

    /// One multiply-accumulate cycle.
    ///
    /// `act_slices[j]` carries `B` activation bits for lane `j`; `shift` is the
    /// bit position of the slice's least significant bit (`B * t` for slice
    /// `t`). When `msb[j]` is set the top bit of the lane's slice is the sign
    /// bit and its product is subtracted.
    pub fn cycle(&mut self, act_slices: &[u8], shift: u32, msb: &[bool]) -> Result<()> {
        self.check_len(act_slices.len(), "activation slice")?;
        self.check_len(msb.len(), "msb flag")?;
        let b = self.bits_per_cycle;
        let mut tree: i64 = 0;
        for ((&w, &s), &is_msb) in self.wr.iter().zip(act_slices).zip(msb) {
            if s == 0 {
                continue;
            }
            for bit in 0..b {
                if (s >> bit) & 1 == 0 {
                    continue;
                }
                let product = if is_msb && bit == b - 1 { -(w as i64) } else { w as i64 };
                tree += product << bit;
            }
        }
        self.accumulate(tree << shift)
    }

    /// Adds a neighbouring SIP's partial sum through the cascade multiplexer.
    pub fn accept_cascade(&mut self, partial: i32) -> Result<()> {
        self.accumulate(partial as i64)
    }

    fn accumulate(&mut self, delta: i64) -> Result<()> {
        let sum = self.or_acc as i64 + delta;
        self.or_acc = i32::try_from(sum).map_err(|_| Error::Overflow(sum))?;
        Ok(())
    }
}

/// `B`-bit slice `t` of `value` in a `bits`-bit two's-complement encoding.
#[inline]
pub fn activation_slice(value: i32, t: u32, bits_per_cycle: u8) -> u8 {
    ((value >> (t * bits_per_cycle as u32)) & ((1 << bits_per_cycle) - 1)) as u8
}

/// Weight slice `t` counted from the most significant end of a
/// `precision`-bit encoding.
#[inline]
pub fn weight_slice_msb_first(value: i32, t: u32, precision: u8, bits_per_cycle: u8) -> u8 {
    let slices = precision as u32 / bits_per_cycle as u32;
    activation_slice(value, slices - 1 - t, bits_per_cycle)
}

/// Serially reduces `np` partial sums along a daisy chain of SIPs, one hop per
/// cycle. Returns the output value and the cycles taken.
pub fn cascade_reduce(row_partials: &[i32]) -> Result<(i32, u32)> {
    let np = row_partials.len();
    if !(1..=16).contains(&np) {
        return Err(Error::Cascade(np));
    }
    let mut chain: Vec<SipState> = row_partials
        .iter()
        .map(|&p| {
            let mut s = SipState::new(1, 1);
            s.or_acc = p;
            s
        })
        .collect();
    for k in 1..np {
        let incoming = chain[k - 1].or_acc;
        chain[k].accept_cascade(incoming)?;
    }
    Ok((chain[np - 1].or_acc, np as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Runs a full bit-serial multiply of one brick and returns OR.
    fn serial_dot(weights: &[i32], acts: &[i32], pa: u8, b: u8) -> i32 {
        let mut s = SipState::new(weights.len(), b);
        s.load_weights_parallel(weights).unwrap();
        let slices = pa.div_ceil(b) as u32;
        for t in 0..slices {
            let sl: Vec<u8> = acts.iter().map(|&a| activation_slice(a, t, b)).collect();
            let msb = vec![t == slices - 1; acts.len()];
            s.cycle(&sl, t * b as u32, &msb).unwrap();
        }
        s.or_acc()
    }

    #[test]
    fn zero_weights_give_zero() {
        assert_eq!(serial_dot(&[0; 16], &[5; 16], 4, 1), 0);
    }

    #[test]
    fn parallel_load_is_identity() {
        let mut s = SipState::new(4, 1);
        s.load_weights_parallel(&[3, -2, 7, -32768]).unwrap();
        assert_eq!(s.wr(), &[3, -2, 7, -32768]);
        assert!(s.load_weights_parallel(&[1, 2, 3]).is_err());
        assert!(s.load_weights_parallel(&[40000, 0, 0, 0]).is_err());
    }

    #[test]
    fn zero_activation_bits_leave_or_unchanged() {
        let mut s = SipState::new(4, 1);
        s.load_weights_parallel(&[3, -2, 7, 1]).unwrap();
        s.accept_cascade(11).unwrap();
        s.cycle(&[0; 4], 3, &[true; 4]).unwrap();
        assert_eq!(s.or_acc(), 11);
    }

    #[test]
    fn msb_negation_two_bit_example() {
        // a = -1 (binary 11), w = 3: +3 then -3*2
        let mut s = SipState::new(1, 1);
        s.load_weights_parallel(&[3]).unwrap();
        s.cycle(&[1], 0, &[false]).unwrap();
        assert_eq!(s.or_acc(), 3);
        s.cycle(&[1], 1, &[true]).unwrap();
        assert_eq!(s.or_acc(), -3);
    }

    #[test]
    fn serial_weight_load_sign_extends() {
        // w = binary 10 (-2 in 2 bits): bit 1 then bit 0
        let mut s = SipState::new(1, 1);
        s.shift_weights(&[1], true).unwrap();
        assert_eq!(s.swr(), &[-1]);
        s.shift_weights(&[0], false).unwrap();
        assert_eq!(s.swr(), &[-2]);
        assert_eq!(s.swr()[0] as u16 & 0b11111, 0b11110);

        let mut z = SipState::new(3, 1);
        z.shift_weights(&[0; 3], true).unwrap();
        z.shift_weights(&[0; 3], false).unwrap();
        assert_eq!(z.swr(), &[0; 3]);
    }

    #[test]
    fn multi_bit_serial_load_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let w: i32 = rng.gen_range(-128..128);
            let mut s = SipState::new(1, 2);
            for t in 0..4 {
                s.shift_weights(&[weight_slice_msb_first(w, t, 8, 2)], t == 0).unwrap();
            }
            assert_eq!(s.swr(), &[w]);
        }
    }

    #[test]
    fn copy_isolates_registers() {
        let mut s = SipState::new(2, 1);
        s.shift_weights(&[1, 0], true).unwrap();
        s.shift_weights(&[1, 1], false).unwrap();
        s.copy_swr_to_wr();
        let held = s.wr().to_vec();
        assert_eq!(held, vec![-1, 1]);
        s.shift_weights(&[0, 1], true).unwrap();
        assert_eq!(s.wr(), held.as_slice());
        s.copy_swr_to_wr();
        let again = s.wr().to_vec();
        s.copy_swr_to_wr();
        assert_eq!(s.wr(), again.as_slice());
    }

    #[test]
    fn serial_matches_parallel_exhaustive_8bit() {
        for a in -128..128 {
            for w in -128..128 {
                assert_eq!(serial_dot(&[w], &[a], 8, 1), a * w, "a={a} w={w}");
            }
        }
    }

    #[test]
    fn serial_matches_parallel_16bit_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for b in [1u8, 2] {
            for _ in 0..20_000 {
                let w: i32 = rng.gen_range(-32768..32768);
                let a: i32 = rng.gen_range(-32768..32768);
                assert_eq!(serial_dot(&[w], &[a], 16, b), a * w);
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        let mut s = SipState::new(2, 1);
        s.load_weights_parallel(&[i16::MAX as i32; 2]).unwrap();
        s.accept_cascade(i32::MAX - 1000).unwrap();
        let r = s.cycle(&[1, 1], 4, &[false, false]);
        assert!(matches!(r, Err(Error::Overflow(_))));
    }

    #[test]
    fn cascade_examples() {
        assert_eq!(cascade_reduce(&[42]).unwrap(), (42, 1));
        assert_eq!(cascade_reduce(&[1; 16]).unwrap(), (16, 16));
        assert!(cascade_reduce(&[]).is_err());
        assert!(cascade_reduce(&[1; 17]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let w: Vec<i32> = (0..64).map(|_| rng.gen_range(-500..500)).collect();
        let a: Vec<i32> = (0..64).map(|_| rng.gen_range(-500..500)).collect();
        let whole: i32 = w.iter().zip(&a).map(|(x, y)| x * y).sum();
        let parts: Vec<i32> = w
            .chunks(16)
            .zip(a.chunks(16))
            .map(|(wc, ac)| serial_dot(wc, ac, 10, 1))
            .collect();
        assert_eq!(cascade_reduce(&parts).unwrap().0, whole);
    }
}
