//! CRC-16/CCITT-FALSE over the bit stream: polynomial 0x1021, initial
//! value 0xFFFF, no reflection, no final XOR.

use crate::iq::BitVec;

const POLY: u16 = 0x1021;
const INIT: u16 = 0xffff;

/// CRC over a bit sequence, bit-serial long division.
pub fn crc16(bits: &[u8]) -> u16 {
    let mut reg = INIT;
    for &b in bits {
        let fb = ((reg >> 15) as u8 ^ (b & 1)) & 1;
        reg <<= 1;
        if fb == 1 {
            reg ^= POLY;
        }
    }
    reg
}

/// Appends the 16 CRC bits, MSB first.
pub fn crc16_append(bits: &[u8]) -> BitVec {
    let crc = crc16(bits);
    let mut out = bits.to_vec();
    for i in (0..16).rev() {
        out.push(((crc >> i) & 1) as u8);
    }
    out
}

/// True iff the trailing 16 bits match the CRC of everything before them.
pub fn crc16_check(bits: &[u8]) -> bool {
    if bits.len() < 16 {
        return false;
    }
    let (msg, tail) = bits.split_at(bits.len() - 16);
    let crc = crc16(msg);
    tail.iter()
        .enumerate()
        .all(|(i, &b)| b == ((crc >> (15 - i)) & 1) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iq::bytes_to_bits;
    use proptest::prelude::*;

    #[test]
    fn published_check_value() {
        // "123456789" -> 0x29B1 for this CRC variant.
        let bits = bytes_to_bits(b"123456789");
        assert_eq!(crc16(&bits), 0x29b1);
    }

    #[test]
    fn single_bit_flips_always_detected() {
        let msg = bytes_to_bits(&[0x13, 0x57, 0x9b, 0xdf, 0x24, 0x68, 0xac, 0xe0]);
        let full = crc16_append(&msg);
        assert!(crc16_check(&full));
        for i in 0..full.len() {
            let mut corrupted = full.clone();
            corrupted[i] ^= 1;
            assert!(!crc16_check(&corrupted), "flip at {i} not detected");
        }
    }

    proptest! {
        #[test]
        fn append_then_check(bits in proptest::collection::vec(0u8..2, 0..200)) {
            prop_assert!(crc16_check(&crc16_append(&bits)));
        }
    }
}
