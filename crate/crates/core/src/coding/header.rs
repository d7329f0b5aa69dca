//! Frame header: payload length, code rate, CRC flag, modulation type,
//! and a 4-bit checksum, packed MSB-first into 16 bits.

use crate::iq::BitVec;
use thiserror::Error;

/// PHY header carried ahead of the payload. Layout, MSB first:
/// `[len:8 | rate:2 | crc:1 | mod:1 | checksum:4]` where the checksum is
/// the XOR fold of the three preceding nibbles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub payload_len: u8,
    pub code_rate_idx: u8,
    pub crc_present: bool,
    pub mod_type: u8,
}

#[derive(Debug, Error, PartialEq)]
pub enum HeaderError {
    #[error("header checksum mismatch")]
    Checksum,
    #[error("header must be 16 bits, got {0}")]
    Length(usize),
    #[error("code rate index {0} out of range")]
    RateIndex(u8),
    #[error("modulation type {0} out of range")]
    ModType(u8),
}

fn checksum4(bits12: &[u8]) -> u8 {
    let mut x = 0u8;
    for nibble in bits12.chunks_exact(4) {
        let v = nibble.iter().fold(0u8, |acc, &b| (acc << 1) | b);
        x ^= v;
    }
    x
}

/// Packs the header into 16 bits.
pub fn build_header(h: &FrameHeader) -> BitVec {
    assert!(h.code_rate_idx < 4, "rate index is 2 bits");
    assert!(h.mod_type < 2, "modulation type is 1 bit");
    let mut bits = Vec::with_capacity(16);
    for i in (0..8).rev() {
        bits.push((h.payload_len >> i) & 1);
    }
    bits.push((h.code_rate_idx >> 1) & 1);
    bits.push(h.code_rate_idx & 1);
    bits.push(h.crc_present as u8);
    bits.push(h.mod_type & 1);
    let cs = checksum4(&bits);
    for i in (0..4).rev() {
        bits.push((cs >> i) & 1);
    }
    bits
}

/// Unpacks and verifies 16 header bits. A checksum mismatch means the
/// frame must be dropped without attempting payload demodulation.
pub fn parse_header(bits: &[u8]) -> Result<FrameHeader, HeaderError> {
    if bits.len() != 16 {
        return Err(HeaderError::Length(bits.len()));
    }
    let cs = bits[12..16].iter().fold(0u8, |acc, &b| (acc << 1) | b);
    if cs != checksum4(&bits[..12]) {
        return Err(HeaderError::Checksum);
    }
    let payload_len = bits[..8].iter().fold(0u8, |acc, &b| (acc << 1) | b);
    let code_rate_idx = (bits[8] << 1) | bits[9];
    Ok(FrameHeader {
        payload_len,
        code_rate_idx,
        crc_present: bits[10] == 1,
        mod_type: bits[11],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_all_field_values() {
        // Exhaustive over the 12 information bits.
        for len in 0..=255u8 {
            for rate in 0..4u8 {
                for crc in [false, true] {
                    for mt in 0..2u8 {
                        let h = FrameHeader {
                            payload_len: len,
                            code_rate_idx: rate,
                            crc_present: crc,
                            mod_type: mt,
                        };
                        let bits = build_header(&h);
                        assert_eq!(parse_header(&bits).unwrap(), h);
                    }
                }
            }
        }
    }

    #[test]
    fn known_bit_pattern() {
        // len = 50, rate 1/2 (index 0), CRC on, mod 0:
        // 0011 0010 | 00 1 0 | checksum 0011^0010^0010 = 0011
        let h = FrameHeader { payload_len: 50, code_rate_idx: 0, crc_present: true, mod_type: 0 };
        let bits = build_header(&h);
        let word = bits.iter().fold(0u16, |acc, &b| (acc << 1) | b as u16);
        assert_eq!(word, 0x3223);
    }

    #[test]
    fn corrupt_checksum_rejected() {
        let h = FrameHeader { payload_len: 9, code_rate_idx: 0, crc_present: true, mod_type: 0 };
        let mut bits = build_header(&h);
        bits[13] ^= 1;
        assert_eq!(parse_header(&bits), Err(HeaderError::Checksum));
        bits[13] ^= 1;
        bits[2] ^= 1; // data corruption is caught too
        assert_eq!(parse_header(&bits), Err(HeaderError::Checksum));
    }
}
