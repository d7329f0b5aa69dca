//! Rate-1/2 constraint-length-7 convolutional code with soft-decision
//! Viterbi decoding.
//!
//! Generators 133/171 (octal), read LSB-first so the low bit of each
//! generator taps the newest input bit. The encoder starts from the
//! all-zero state and appends six zero tail bits, so the decoder can
//! force its traceback to end in state zero.

use crate::iq::BitVec;
use thiserror::Error;

/// Tail bits flushed through the encoder to terminate the trellis.
pub const TAIL_BITS: usize = 6;

const G1: u32 = 0o133;
const G2: u32 = 0o171;
const STATES: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum CodingError {
    #[error("soft input length {0} must be an even count of at least {min}", min = 2 * (TAIL_BITS + 1))]
    SoftLength(usize),
}

fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Output bit pair for one input bit leaving a given state. The state
/// holds the six previous inputs, newest in the least significant bit, so
/// the tap word is `(state << 1) | input` with generator bit k reaching
/// the input from k steps ago.
fn branch_out(state: usize, input: u8) -> (u8, u8) {
    let w = ((state as u32) << 1) | input as u32;
    (parity(w & G1), parity(w & G2))
}

fn next_state(state: usize, input: u8) -> usize {
    ((state << 1) | input as usize) & (STATES - 1)
}

/// Encodes with zero-state start and six zero tail bits appended before
/// encoding; output holds `2 * (len + 6)` bits, first-listed generator
/// first in each pair.
pub fn conv_encode(bits: &[u8]) -> BitVec {
    let mut out = Vec::with_capacity(2 * (bits.len() + TAIL_BITS));
    let mut state = 0usize;
    for &b in bits.iter().chain(std::iter::repeat(&0u8).take(TAIL_BITS)) {
        let (o1, o2) = branch_out(state, b & 1);
        out.push(o1);
        out.push(o2);
        state = next_state(state, b & 1);
    }
    out
}

/// Maximum-likelihood sequence decoding of soft metrics, one metric per
/// coded bit, where a positive metric favors a coded 1 (coded bits map
/// 0 -> -1, 1 -> +1 and the path score is the sum of `c_i * soft_i`).
/// The traceback is forced to the zero state and the six tail bits are
/// stripped from the result.
pub fn viterbi_decode_soft(soft: &[f64]) -> Result<BitVec, CodingError> {
    if soft.len() % 2 != 0 || soft.len() < 2 * (TAIL_BITS + 1) {
        return Err(CodingError::SoftLength(soft.len()));
    }
    let steps = soft.len() / 2;
    let info_len = steps - TAIL_BITS;

    const NEG: f64 = f64::NEG_INFINITY;
    let mut metric = [NEG; STATES];
    metric[0] = 0.0;
    let mut from: Vec<[u8; STATES]> = Vec::with_capacity(steps);
    let mut inputs: Vec<[u8; STATES]> = Vec::with_capacity(steps);

    for t in 0..steps {
        let la = soft[2 * t];
        let lb = soft[2 * t + 1];
        let mut next = [NEG; STATES];
        let mut pred = [0u8; STATES];
        let mut inp = [0u8; STATES];
        // Tail steps admit only zero inputs, which pins the end state.
        let max_input = if t < info_len { 1 } else { 0 };
        for s in 0..STATES {
            let m = metric[s];
            if m == NEG {
                continue;
            }
            for b in 0..=max_input {
                let (o1, o2) = branch_out(s, b);
                let cand = m
                    + if o1 == 1 { la } else { -la }
                    + if o2 == 1 { lb } else { -lb };
                let ns = next_state(s, b);
                if cand > next[ns] {
                    next[ns] = cand;
                    pred[ns] = s as u8;
                    inp[ns] = b;
                }
            }
        }
        metric = next;
        from.push(pred);
        inputs.push(inp);
    }

    let mut state = 0usize;
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        bits[t] = inputs[t][state];
        state = from[t][state] as usize;
    }
    bits.truncate(info_len);
    Ok(bits)
}
