//! Additive synchronous scrambler: LFSR x^9 + x^5 + 1, all-ones seed.
//!
//! The keystream obeys `a[n] = a[n-5] ^ a[n-9]` with the nine preceding
//! values seeded to 1. XOR-ing it onto the bit stream is an involution,
//! so descrambling is the same operation. The polynomial is primitive,
//! giving a keystream period of 511.

use crate::iq::BitVec;

struct Lfsr {
    reg: u16, // bit i-1 holds a[n-i]
}

impl Lfsr {
    fn new() -> Self {
        Lfsr { reg: 0x1ff }
    }

    fn next(&mut self) -> u8 {
        let out = (((self.reg >> 4) ^ (self.reg >> 8)) & 1) as u8;
        self.reg = ((self.reg << 1) | out as u16) & 0x1ff;
        out
    }
}

/// XORs the keystream onto the bits.
pub fn scramble(bits: &[u8]) -> BitVec {
    let mut lfsr = Lfsr::new();
    bits.iter().map(|&b| b ^ lfsr.next()).collect()
}

/// Identical to [`scramble`]; the additive scrambler is its own inverse.
pub fn descramble(bits: &[u8]) -> BitVec {
    scramble(bits)
}

/// Descrambles soft metrics: a keystream bit of 1 flips the metric sign,
/// matching the XOR in the bit domain.
pub fn descramble_soft(soft: &[f64]) -> Vec<f64> {
    let mut lfsr = Lfsr::new();
    soft.iter()
        .map(|&s| if lfsr.next() == 1 { -s } else { s })
        .collect()
}
