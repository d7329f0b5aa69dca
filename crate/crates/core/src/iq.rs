//! Complex baseband sample buffers and small bit/chip containers.

use num_complex::Complex64;
use std::io::{self, Read, Write};
use thiserror::Error;

/// A complex baseband sample sequence tagged with its sample-rate
/// multiple: `rate_mult = 1` means the synchronization rate `K*B`,
/// `rate_mult = R` the upsampled rate `R*K*B`.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    pub samples: Vec<Complex64>,
    pub rate_mult: u32,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, rate_mult: u32) -> Self {
        IqBuffer { samples, rate_mult }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Decimates by sample-picking (keeps indices 0, r, 2r, ...), which is
    /// the receiver's rate-change rule throughout.
    pub fn decimate(&self, r: u32) -> IqBuffer {
        let step = r as usize;
        let samples = self.samples.iter().copied().step_by(step).collect();
        IqBuffer { samples, rate_mult: self.rate_mult / r.max(1) }
    }

    /// Writes interleaved float32 (re, im) little-endian, the common SDR
    /// capture layout, for external inspection.
    pub fn write_f32_le<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let mut buf = Vec::with_capacity(self.samples.len() * 8);
        for s in &self.samples {
            buf.extend_from_slice(&(s.re as f32).to_le_bytes());
            buf.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    /// Reads a buffer previously written by [`write_f32_le`].
    ///
    /// [`write_f32_le`]: IqBuffer::write_f32_le
    pub fn read_f32_le<R: Read>(r: &mut R, rate_mult: u32) -> io::Result<IqBuffer> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() % 8 != 0 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "length not a multiple of one (re, im) float32 pair",
            ));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64;
                Complex64::new(re, im)
            })
            .collect();
        Ok(IqBuffer { samples, rate_mult })
    }
}

/// Bits are carried as one value per element, 0 or 1, MSB-first when they
/// came from bytes.
pub type BitVec = Vec<u8>;

/// Chips take values strictly in {-1, +1}.
pub type ChipVec = Vec<i8>;

#[derive(Debug, Error, PartialEq)]
pub enum ChipError {
    #[error("chip value {0} at index {1} is not +/-1")]
    NotBinary(i8, usize),
    #[error("empty sequence")]
    Empty,
}

/// Validates that every element is exactly +1 or -1.
pub fn check_chips(chips: &[i8]) -> Result<(), ChipError> {
    if chips.is_empty() {
        return Err(ChipError::Empty);
    }
    for (i, &c) in chips.iter().enumerate() {
        if c != 1 && c != -1 {
            return Err(ChipError::NotBinary(c, i));
        }
    }
    Ok(())
}

/// Unpacks bytes into bits, MSB first.
pub fn bytes_to_bits(bytes: &[u8]) -> BitVec {
    let mut bits = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for i in (0..8).rev() {
            bits.push((b >> i) & 1);
        }
    }
    bits
}

/// Packs bits (MSB first) back into bytes. Length must be a multiple of 8.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    assert!(bits.len() % 8 == 0, "bit count {} not a byte multiple", bits.len());
    bits.chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_byte_round_trip() {
        let bytes = vec![0x00, 0xff, 0xa5, 0x3c];
        assert_eq!(bits_to_bytes(&bytes_to_bits(&bytes)), bytes);
        assert_eq!(bytes_to_bits(&[0xa5])[..4], [1, 0, 1, 0]);
    }

    #[test]
    fn chip_validation() {
        assert!(check_chips(&[1, -1, 1]).is_ok());
        assert_eq!(check_chips(&[1, 0]), Err(ChipError::NotBinary(0, 1)));
        assert_eq!(check_chips(&[]), Err(ChipError::Empty));
    }

    #[test]
    fn f32_export_round_trips() {
        let buf = IqBuffer::new(
            vec![Complex64::new(1.0, -0.5), Complex64::new(0.25, 0.125)],
            1,
        );
        let mut bytes = Vec::new();
        buf.write_f32_le(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 16);
        let back = IqBuffer::read_f32_le(&mut &bytes[..], 1).unwrap();
        assert_eq!(back, buf);
    }

    #[test]
    fn decimate_picks_every_rth() {
        let buf = IqBuffer::new(
            (0..8).map(|i| Complex64::new(i as f64, 0.0)).collect(),
            4,
        );
        let dec = buf.decimate(4);
        assert_eq!(dec.rate_mult, 1);
        let re: Vec<f64> = dec.samples.iter().map(|s| s.re).collect();
        assert_eq!(re, vec![0.0, 4.0]);
    }
}
