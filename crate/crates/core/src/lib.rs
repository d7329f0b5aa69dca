//! Baseband PHY library for a low-power wide-area modem that pairs a
//! conjugate-chirp preamble with a DSSS-MSK payload.
//!
//! The transmit side builds frames from closed-form phase expressions:
//! a down-chirp/up-chirp preamble followed by binary CPFSK chips produced
//! by the coding chain (CRC, convolutional code, scrambler, interleaver,
//! DSSS spreading). The receive side runs a sliding-correlation detector
//! with a CFAR threshold, joint start-of-packet/CFO estimation from the
//! two chirp peaks, fractional timing and CFO refinement, and symbol-level
//! non-coherent joint despreading and demodulation feeding a soft Viterbi
//! decoder.
//!
//! [`theory`] holds the closed-form counterparts of everything the signal
//! path does (correlation functions, CFAR threshold, detection rates,
//! CRLB, sensitivity) so Monte-Carlo results can be checked against
//! analysis.

pub mod channel;
pub mod coding;
pub mod demod;
pub mod iq;
pub mod params;
pub mod rng;
pub mod sync;
pub mod theory;
pub mod waveform;

pub use iq::IqBuffer;
pub use params::PhyParams;
pub use rng::RandomStream;
