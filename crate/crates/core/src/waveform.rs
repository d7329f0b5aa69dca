//! Transmit-side baseband signal generation.
//!
//! Everything here is a direct evaluation of the closed-form phase
//! expressions; upsampled buffers (`rate_mult = R`) come from evaluating
//! the same expressions on the finer index grid rather than from
//! zero-stuffing and filtering. Decimating an upsampled chirp by picking
//! every R-th sample therefore reproduces the sync-rate chirp bit-exactly.

use crate::iq::{ChipVec, IqBuffer};
use crate::params::PhyParams;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Base down-chirp: unit-magnitude samples sweeping from +B/2 down to
/// -B/2 across N chips. At `rate_mult = m` the chirp is evaluated on the
/// grid `n / (K*m)`, giving `N*K*m` samples.
pub fn gen_down_chirp(p: &PhyParams, rate_mult: u32) -> IqBuffer {
    let kp = (p.k * rate_mult) as f64;
    let len = (p.n * p.k * rate_mult) as usize;
    let n_chips = p.n as f64;
    let samples = (0..len)
        .map(|n| {
            // u = n/K' counts chips; phase = -pi*u*(u/N - 1) equals
            // -2*pi*(n^2/(2*N*K'^2) - n/(2*K')) and makes the expression
            // exactly invariant under grid refinement.
            let u = n as f64 / kp;
            let phase = -PI * u * (u / n_chips - 1.0);
            Complex64::from_polar(1.0, phase)
        })
        .collect();
    IqBuffer::new(samples, rate_mult)
}

/// Base up-chirp: the elementwise complex conjugate of the down-chirp.
pub fn gen_up_chirp(p: &PhyParams, rate_mult: u32) -> IqBuffer {
    let mut buf = gen_down_chirp(p, rate_mult);
    for s in &mut buf.samples {
        *s = s.conj();
    }
    buf
}

/// The frame preamble: a down-chirp followed by an up-chirp, 2N chips.
pub fn gen_preamble(p: &PhyParams, rate_mult: u32) -> IqBuffer {
    let mut down = gen_down_chirp(p, rate_mult);
    let up = gen_up_chirp(p, rate_mult);
    down.samples.extend_from_slice(&up.samples);
    down
}

/// Binary CPFSK over a +/-1 chip sequence with modulation index `h_m` and
/// a rectangular one-chip phase pulse. The phase response accumulates
/// `h_m * pi` per chip, split evenly across the `K*rate_mult` samples of
/// the chip, so the envelope is constant and the phase is continuous.
pub fn cpfsk_modulate(chips: &ChipVec, p: &PhyParams, rate_mult: u32) -> IqBuffer {
    let kp = (p.k * rate_mult) as usize;
    let scale = PI * p.h_m / kp as f64;
    let mut samples = Vec::with_capacity(chips.len() * kp);
    // Integer phase index: the sample phase is always an exact multiple of
    // pi*h_m/K', which keeps adjacent-sample increments exact.
    let mut acc: i64 = 0;
    for &c in chips {
        for _ in 0..kp {
            samples.push(Complex64::from_polar(1.0, acc as f64 * scale));
            acc += c as i64;
        }
    }
    IqBuffer::new(samples, rate_mult)
}

/// One assembled transmit frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub preamble: IqBuffer,
    pub header_chips: ChipVec,
    pub payload_chips: ChipVec,
    pub combined: IqBuffer,
}

/// Concatenates the preamble and the CPFSK modulation of
/// `header_chips ++ payload_chips`. The CPFSK phase accumulator starts at
/// zero on the first chip; the preamble carries no phase into the payload.
pub fn assemble_frame(
    p: &PhyParams,
    header_chips: ChipVec,
    payload_chips: ChipVec,
    rate_mult: u32,
) -> Frame {
    let preamble = gen_preamble(p, rate_mult);
    let mut combined = preamble.clone();
    let mut chips = header_chips.clone();
    chips.extend_from_slice(&payload_chips);
    if !chips.is_empty() {
        let pay = cpfsk_modulate(&chips, p, rate_mult);
        combined.samples.extend_from_slice(&pay.samples);
    }
    Frame { preamble, header_chips, payload_chips, combined }
}
