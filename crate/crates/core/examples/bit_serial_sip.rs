//! Walks one SIP through a 4-lane inner product with 5-bit signed
//! activations, one bit per cycle, and prints the output register after
//! every cycle. The last cycle carries the sign bits and subtracts.
//!
//! cargo run --example bit_serial_sip

use tartan::functional::sip::{activation_slice, weight_slice_msb_first};
use tartan::functional::SipState;

fn main() -> tartan::Result<()> {
    let weights = [3, -7, 12, -1];
    let acts = [5, -3, 9, -16];
    let pa = 5u8;
    let expected: i32 = weights.iter().zip(&acts).map(|(w, a)| w * a).sum();

    let mut sip = SipState::new(4, 1);
    // Weights stream into the SWR MSB first, then move to the WR in one copy.
    let pw = 5u8;
    for t in 0..pw as u32 {
        let slices: Vec<u8> = weights.iter().map(|&w| weight_slice_msb_first(w, t, pw, 1)).collect();
        sip.shift_weights(&slices, t == 0)?;
    }
    sip.copy_swr_to_wr();
    println!("WR after serial load: {:?}", sip.wr());

    for t in 0..pa as u32 {
        let slices: Vec<u8> = acts.iter().map(|&a| activation_slice(a, t, 1)).collect();
        let msb = [t == pa as u32 - 1; 4];
        sip.cycle(&slices, t, &msb)?;
        println!("cycle {t}: bits {slices:?}{}  OR = {}", if msb[0] { " (sign)" } else { "" }, sip.or_acc());
    }
    println!("bit-parallel result {expected}");
    assert_eq!(sip.or_acc(), expected);
    Ok(())
}
