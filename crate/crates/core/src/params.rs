//! Static PHY parameters shared by every stage of the modem.

use thiserror::Error;

/// Coding rate of the payload protection. Only 1/2 is implemented; the
/// two-bit rate field in the frame header is reserved for future rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodeRate {
    #[default]
    Half,
}

impl CodeRate {
    pub fn as_fraction(self) -> (u32, u32) {
        match self {
            CodeRate::Half => (1, 2),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            CodeRate::Half => 0,
        }
    }

    pub fn from_index(idx: u8) -> Option<Self> {
        match idx {
            0 => Some(CodeRate::Half),
            _ => None,
        }
    }
}

/// All static PHY constants.
///
/// `n` is the chip count of one chirp (`n = 2^sf`), `k` the oversampling
/// factor at the synchronization rate (samples per chip, `f_s = k*b_hz`),
/// `r` the extra upsampling factor used for fractional-timing work, and
/// `sf_p` the payload spreading-sequence length in chips per bit. `h_m`
/// is the CPFSK modulation index (0.5 for MSK).
#[derive(Debug, Clone, PartialEq)]
pub struct PhyParams {
    pub sf: u32,
    pub n: u32,
    pub k: u32,
    pub r: u32,
    pub b_hz: f64,
    pub sf_p: u32,
    pub h_m: f64,
    pub payload_len: u32,
    pub code_rate: CodeRate,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("N != 2^SF (N = {n}, SF = {sf})")]
    ChirpLength { n: u32, sf: u32 },
    #[error("K < ceil(2*h_m) (K = {k}, h_m = {h_m})")]
    Nyquist { k: u32, h_m: f64 },
    #[error("R < 1")]
    Upsampling,
    #[error("SF_p < 2 (SF_p = {0})")]
    SpreadingFactor(u32),
    #[error("h_m <= 0")]
    ModulationIndex,
    #[error("bandwidth <= 0")]
    Bandwidth,
    #[error("payload length {0} exceeds 255 bytes")]
    PayloadLen(u32),
}

impl Default for PhyParams {
    /// Table-like default operating point: N = 128 chips per chirp,
    /// K = 2, R = 4, B = 76.8 kHz, SF_p = 8, MSK (h_m = 1/2), 50-byte
    /// payload at rate 1/2.
    fn default() -> Self {
        PhyParams {
            sf: 7,
            n: 128,
            k: 2,
            r: 4,
            b_hz: 76_800.0,
            sf_p: 8,
            h_m: 0.5,
            payload_len: 50,
            code_rate: CodeRate::Half,
        }
    }
}

impl PhyParams {
    /// Checks every invariant and returns the parameters unchanged if all
    /// hold. The first violated invariant is reported by name.
    pub fn validate(self) -> Result<Self, ParamError> {
        if self.sf >= 32 || self.n != 1u32 << self.sf {
            return Err(ParamError::ChirpLength { n: self.n, sf: self.sf });
        }
        if self.h_m <= 0.0 {
            return Err(ParamError::ModulationIndex);
        }
        if (self.k as f64) < (2.0 * self.h_m).ceil() {
            return Err(ParamError::Nyquist { k: self.k, h_m: self.h_m });
        }
        if self.r < 1 {
            return Err(ParamError::Upsampling);
        }
        if self.sf_p < 2 {
            return Err(ParamError::SpreadingFactor(self.sf_p));
        }
        if !(self.b_hz > 0.0) {
            return Err(ParamError::Bandwidth);
        }
        if self.payload_len > 255 {
            return Err(ParamError::PayloadLen(self.payload_len));
        }
        Ok(self)
    }

    /// Samples per chirp at the synchronization rate `K*B`.
    pub fn nk(&self) -> usize {
        (self.n * self.k) as usize
    }

    /// Samples per preamble (one down-chirp plus one up-chirp) at `K*B`.
    pub fn preamble_len(&self) -> usize {
        2 * self.nk()
    }

    /// Samples per payload symbol (one spread bit) at `K*B`.
    pub fn symbol_len(&self) -> usize {
        (self.k * self.sf_p) as usize
    }
}

/// Round half away from zero. Used wherever a signed quantity is snapped
/// to the sample grid, so that positive and negative frequency offsets
/// quantize symmetrically.
pub fn round_half_away(x: f64) -> f64 {
    if x >= 0.0 {
        (x + 0.5).floor()
    } else {
        (x - 0.5).ceil()
    }
}
