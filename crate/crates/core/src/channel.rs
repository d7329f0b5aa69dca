//! Flat-fading channel with CFO, sample-domain timing offset, and AWGN,
//! applied at the upsampled rate `R*K*B`.
//!
//! The timing offset is an integer delay at the fine rate, which makes it
//! fractional at the sync rate with resolution `T_c/(R*K)`; no
//! interpolation filters are involved. Noise is white at the fine rate
//! with the same per-sample variance the receiver sees after decimation,
//! since decimation is sample-picking.

use crate::iq::IqBuffer;
use crate::rng::complex_gaussian;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Awgn,
    RayleighFlat,
}

/// One channel realization. `df_fs` is the CFO normalized to the sync
/// sampling rate `K*B` and stays within the detector's estimation range;
/// `tau_fine` is the arrival delay in fine-rate samples; `snr_db` is the
/// per-sample SNR at the sync rate (noise sigma = 10^(-snr_db/20)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub gain: Complex64,
    pub kind: ChannelKind,
    pub df_fs: f64,
    pub tau_fine: usize,
    pub snr_db: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("output length {out} too small for delay {tau} plus signal {sig}")]
    OutputTooShort { out: usize, tau: usize, sig: usize },
    #[error("AWGN kind requires unit gain")]
    GainNotUnit,
    #[error("CFO {0} outside [-0.25, 0.25]")]
    CfoRange(f64),
}

impl ChannelSpec {
    /// An impairment-free AWGN spec at the given SNR.
    pub fn awgn(snr_db: f64) -> Self {
        ChannelSpec {
            gain: Complex64::new(1.0, 0.0),
            kind: ChannelKind::Awgn,
            df_fs: 0.0,
            tau_fine: 0,
            snr_db,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.kind == ChannelKind::Awgn && (self.gain - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(ChannelError::GainNotUnit);
        }
        if self.df_fs.abs() > 0.25 {
            return Err(ChannelError::CfoRange(self.df_fs));
        }
        Ok(())
    }
}

/// Noise amplitude for a per-sample SNR in dB against a unit-power
/// signal: `sigma = 10^(-snr_db/20)`; the complex noise splits the
/// variance `sigma^2` evenly between real and imaginary parts.
pub fn snr_to_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// Applies one channel realization:
/// `out[n] = h * tx[n - tau] * exp(j*2*pi*(df/R)*(n - tau)) + w[n]`
/// with the transmit signal zero outside its support. The CFO phase ramp
/// uses `df_fs / R` per fine-rate sample because `df_fs` is normalized at
/// the sync rate. The leading `tau_fine` samples are noise only.
pub fn apply_channel(
    tx: &IqBuffer,
    spec: &ChannelSpec,
    rng: &mut impl Rng,
    out_len: usize,
) -> Result<IqBuffer, ChannelError> {
    spec.validate()?;
    if out_len < tx.len() + spec.tau_fine {
        return Err(ChannelError::OutputTooShort {
            out: out_len,
            tau: spec.tau_fine,
            sig: tx.len(),
        });
    }
    let sigma = snr_to_sigma(spec.snr_db);
    let df_fine = spec.df_fs / tx.rate_mult as f64;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let sig = if n >= spec.tau_fine && n - spec.tau_fine < tx.len() {
            let m = (n - spec.tau_fine) as f64;
            spec.gain * tx.samples[n - spec.tau_fine] * Complex64::from_polar(1.0, TAU * df_fine * m)
        } else {
            Complex64::new(0.0, 0.0)
        };
        out.push(sig + complex_gaussian(rng, sigma));
    }
    Ok(IqBuffer::new(out, tx.rate_mult))
}

/// Draws a per-frame Rayleigh-flat gain `h ~ CN(0, 1)`.
pub fn rayleigh_gain(rng: &mut impl Rng) -> Complex64 {
    complex_gaussian(rng, 1.0)
}

/// Pure-noise buffer: i.i.d. circularly-symmetric complex Gaussian with
/// total variance `sigma^2` per sample.
pub fn gen_noise(rng: &mut impl Rng, n_samples: usize, sigma: f64) -> IqBuffer {
    let samples = (0..n_samples).map(|_| complex_gaussian(rng, sigma)).collect();
    IqBuffer::new(samples, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhyParams;
    use crate::rng::RandomStream;
    use crate::waveform::gen_down_chirp;

    #[test]
    fn snr_to_sigma_values() {
        assert!((snr_to_sigma(0.0) - 1.0).abs() < 1e-15);
        assert!((snr_to_sigma(20.0) - 0.1).abs() < 1e-15);
        assert!((snr_to_sigma(-10.0) - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_channel_pads_with_zeros() {
        let p = PhyParams::default();
        let tx = gen_down_chirp(&p, p.r);
        let spec = ChannelSpec { snr_db: 300.0, ..ChannelSpec::awgn(300.0) };
        let mut rng = RandomStream::new(1, 0).rng();
        let out = apply_channel(&tx, &spec, &mut rng, tx.len() + 16).unwrap();
        for (a, b) in out.samples.iter().zip(&tx.samples) {
            assert!((a - b).norm() < 1e-12);
        }
        for s in &out.samples[tx.len()..] {
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn cfo_preserves_envelope() {
        let p = PhyParams::default();
        let tx = gen_down_chirp(&p, p.r);
        let spec = ChannelSpec { df_fs: 0.1, tau_fine: 33, ..ChannelSpec::awgn(300.0) };
        let mut rng = RandomStream::new(2, 0).rng();
        let out = apply_channel(&tx, &spec, &mut rng, tx.len() + 64, ).unwrap();
        for n in 0..tx.len() {
            assert!((out.samples[n + 33].norm() - tx.samples[n].norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn cfo_phase_referenced_to_delay() {
        // Direct evaluation of the model for a small random buffer.
        let tx = IqBuffer::new(
            (0..8).map(|i| Complex64::from_polar(1.0, 0.3 * i as f64)).collect(),
            4,
        );
        let spec = ChannelSpec {
            gain: Complex64::from_polar(0.8, 1.1),
            kind: ChannelKind::RayleighFlat,
            df_fs: 0.12,
            tau_fine: 5,
            snr_db: 300.0,
        };
        let mut rng = RandomStream::new(3, 0).rng();
        let out = apply_channel(&tx, &spec, &mut rng, 20).unwrap();
        for n in 0..20usize {
            let expect = if (5..13).contains(&n) {
                let m = (n - 5) as f64;
                spec.gain * tx.samples[n - 5] * Complex64::from_polar(1.0, TAU * (0.12 / 4.0) * m)
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((out.samples[n] - expect).norm() < 1e-10, "sample {n}");
        }
    }

    #[test]
    fn decimation_recovers_sync_rate_delay() {
        let p = PhyParams::default();
        let tx = gen_down_chirp(&p, p.r);
        let tau_fine = 12 * p.r as usize; // delay a whole number of sync samples
        let spec = ChannelSpec { tau_fine, ..ChannelSpec::awgn(300.0) };
        let mut rng = RandomStream::new(4, 0).rng();
        let out = apply_channel(&tx, &spec, &mut rng, tx.len() + tau_fine + 8).unwrap();
        let dec = out.decimate(p.r);
        let sync = gen_down_chirp(&p, 1);
        for n in 0..sync.len() {
            assert!((dec.samples[n + 12] - sync.samples[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_only_prefix_has_configured_variance() {
        let p = PhyParams::default();
        let tx = gen_down_chirp(&p, p.r);
        let spec = ChannelSpec { tau_fine: 40_000, df_fs: 0.2, ..ChannelSpec::awgn(0.0) };
        let mut rng = RandomStream::new(5, 0).rng();
        let out = apply_channel(&tx, &spec, &mut rng, tx.len() + 40_000).unwrap();
        let var: f64 = out.samples[..40_000].iter().map(|s| s.norm_sqr()).sum::<f64>() / 40_000.0;
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn rayleigh_gain_is_unit_power() {
        let mut rng = RandomStream::new(6, 0).rng();
        let n = 100_000;
        let mean_sq: f64 = (0..n).map(|_| rayleigh_gain(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean_sq - 1.0).abs() < 0.02, "E|h|^2 = {mean_sq}");
    }

    #[test]
    fn noise_moments() {
        let mut rng = RandomStream::new(7, 0).rng();
        let sigma = 0.7;
        let n = 1_000_000usize;
        let buf = gen_noise(&mut rng, n, sigma);
        let var: f64 = buf.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.01, "variance ratio {}", var / (sigma * sigma));
        let mean: Complex64 = buf.samples.iter().sum::<Complex64>() / n as f64;
        assert!(mean.norm() < 3.0 * sigma / (n as f64).sqrt());
        let corr: f64 = buf.samples.iter().map(|s| s.re * s.im).sum::<f64>() / n as f64;
        assert!(corr.abs() < 3.0 * sigma * sigma / (n as f64).sqrt());
    }

    #[test]
    fn output_length_guard() {
        let p = PhyParams::default();
        let tx = gen_down_chirp(&p, 1);
        let spec = ChannelSpec { tau_fine: 10, ..ChannelSpec::awgn(10.0) };
        let mut rng = RandomStream::new(8, 0).rng();
        assert!(matches!(
            apply_channel(&tx, &spec, &mut rng, tx.len()),
            Err(ChannelError::OutputTooShort { .. })
        ));
    }
}
