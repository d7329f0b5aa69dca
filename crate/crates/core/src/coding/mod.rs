//! Bit-domain transmit/receive chain: CRC, convolutional coding with
//! soft-decision Viterbi, scrambling, interleaving, header build/parse,
//! and DSSS spreading.
//!
//! Transmit order for the payload is CRC append, convolutional encode,
//! scramble, interleave; the coded header is then inserted in front and
//! the whole bit stream is spread into +/-1 chips. The receiver inverts
//! the chain in reverse order, carrying soft metrics through the
//! deinterleaver and descrambler (a keystream bit of 1 flips the metric
//! sign) into the Viterbi decoder.

mod conv;
mod crc;
mod header;
mod interleave;
mod scramble;
mod spread;

pub use conv::{conv_encode, viterbi_decode_soft, CodingError, TAIL_BITS};
pub use crc::{crc16, crc16_append, crc16_check};
pub use header::{build_header, parse_header, FrameHeader, HeaderError};
pub use interleave::{deinterleave, interleave, INTERLEAVER_ROWS};
pub use scramble::{descramble, descramble_soft, scramble};
pub use spread::{alternating_sum, spread, SeqError, SpreadingSequence};

use crate::iq::{bits_to_bytes, bytes_to_bits, BitVec, ChipVec};

/// Fully encoded frame bits, ready for spreading.
#[derive(Debug, Clone)]
pub struct EncodedFrame {
    pub header_bits: BitVec,
    pub payload_bits: BitVec,
    /// Zero-padding added to make the payload a whole interleaver block.
    pub payload_pad: usize,
}

/// Number of coded bits the header occupies (16 header bits plus the
/// encoder tail, at rate 1/2).
pub fn header_coded_len() -> usize {
    2 * (16 + TAIL_BITS)
}

/// Number of coded payload bits for an `l`-byte payload, after CRC, tail,
/// and interleaver padding.
pub fn payload_coded_len(l: usize) -> usize {
    let coded = 2 * (l * 8 + 16 + TAIL_BITS);
    coded.div_ceil(INTERLEAVER_ROWS) * INTERLEAVER_ROWS
}

/// Runs the full transmit bit chain for one frame and spreads the result
/// into chips.
pub fn encode_frame(payload: &[u8], header: &FrameHeader, d: &SpreadingSequence) -> (EncodedFrame, ChipVec) {
    let coded_header = conv_encode(&build_header(header));

    let with_crc = crc16_append(&bytes_to_bits(payload));
    let coded = conv_encode(&with_crc);
    let scrambled = scramble(&coded);
    let (interleaved, pad) = interleave(&scrambled, INTERLEAVER_ROWS);

    let mut all_bits = coded_header.clone();
    all_bits.extend_from_slice(&interleaved);
    let chips = spread(&all_bits, d);
    (
        EncodedFrame { header_bits: coded_header, payload_bits: interleaved, payload_pad: pad },
        chips,
    )
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DecodeError {
    #[error("header: {0}")]
    Header(#[from] HeaderError),
    #[error("payload CRC check failed")]
    Crc,
    #[error("{0}")]
    Coding(#[from] CodingError),
}

/// Decodes the header from its soft coded bits.
pub fn decode_header(soft: &[f64]) -> Result<FrameHeader, DecodeError> {
    let bits = viterbi_decode_soft(soft)?;
    Ok(parse_header(&bits)?)
}

/// Decodes the payload from its soft coded bits given the payload length
/// learned from the header. Verifies and strips the CRC.
pub fn decode_payload(soft: &[f64], payload_len: usize) -> Result<Vec<u8>, DecodeError> {
    let coded_len = 2 * (payload_len * 8 + 16 + TAIL_BITS);
    let deint = deinterleave(soft, INTERLEAVER_ROWS, coded_len);
    let descrambled = descramble_soft(&deint);
    let bits = viterbi_decode_soft(&descrambled)?;
    if !crc16_check(&bits) {
        return Err(DecodeError::Crc);
    }
    Ok(bits_to_bytes(&bits[..payload_len * 8]))
}
