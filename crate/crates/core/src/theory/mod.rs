//! Closed-form link analysis: chirp correlation functions, CFO-leakage
//! curves, the CFAR threshold and detection/false-alarm rates, the CFO
//! estimation CRLB, receiver sensitivity, and the DSSS-MSK correlation
//! coefficients. These are the oracles the Monte-Carlo results are
//! validated against.
//!
//! Unit conventions: functions describing the sampled signal path
//! (`chirp_xcorr_cfo`, `residual_cfo_corr`, `crlb_cfo`) take the CFO
//! normalized to the sync sampling rate `f_s = K*B`; the peak-leakage and
//! detection-rate functions (`corr_peak_cfo`, `corr_peak_ratio`,
//! `detection_prob`) take it normalized to the bandwidth `B`, matching
//! how operating ranges are usually quoted. The two differ by the factor
//! `K`.

mod marcum;

pub use marcum::marcum_q1;

use crate::params::round_half_away;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("target false alarm rate must lie in (0, 1), got {0}")]
    PfaRange(f64),
    #[error("window width must be >= 1")]
    WindowWidth,
    #[error("CFO bounds [{lo}, {hi}] invalid: need lo < hi within [-0.25, 0.25]")]
    CfoBounds { lo: f64, hi: f64 },
    #[error("detection rate is derived for the AWGN case only")]
    UnsupportedFading,
}

/// CFO prior used when averaging detection rates. Bounds are normalized
/// to the bandwidth `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CfoDistribution {
    Uniform { lo: f64, hi: f64 },
}

impl CfoDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, TheoryError> {
        if !(lo < hi) || lo < -0.25 || hi > 0.25 {
            return Err(TheoryError::CfoBounds { lo, hi });
        }
        Ok(CfoDistribution::Uniform { lo, hi })
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            CfoDistribution::Uniform { lo, hi } => (lo, hi),
        }
    }
}

/// One (x, y) point of an evaluated curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPoint {
    pub x: f64,
    pub y: f64,
}

/// Magnitude of the chirp autocorrelation at integer lag `m`, normalized
/// so lag 0 gives 1: a discrete-sinc shape
/// `|sin(pi*m*(NK-|m|)/(N*K^2)) / sin(pi*m/(N*K^2))| / (NK)`.
pub fn chirp_autocorr(m: i64, n: u32, k: u32) -> f64 {
    let nk = (n * k) as f64;
    let nk2 = (n * k * k) as f64;
    let ma = m.unsigned_abs() as f64;
    if m == 0 {
        return 1.0;
    }
    if ma >= nk {
        return 0.0;
    }
    let num = (PI * m as f64 * (nk - ma) / nk2).sin();
    let den = (PI * m as f64 / nk2).sin();
    (num / den).abs() / nk
}

/// Magnitude of the cross-correlation between the base down-chirp and the
/// base up-chirp at integer lag `m`, evaluated as the direct finite sum
/// (no closed simplification exists). Small for all lags once N is large.
pub fn chirp_xcorr_conj(m: i64, n: u32, k: u32) -> f64 {
    let nk = (n * k) as i64;
    let nk2 = (n * k * k) as f64;
    let kf = k as f64;
    let ma = m.unsigned_abs() as i64;
    if ma >= nk {
        return 0.0;
    }
    let sum: num_complex::Complex64 = (0..nk - ma)
        .map(|i| {
            let nn = i as f64;
            let phase = 2.0 * PI * ((nn * nn + ma as f64 * nn) / nk2 - nn / kf);
            num_complex::Complex64::from_polar(1.0, phase)
        })
        .sum();
    sum.norm() / nk as f64
}

/// Magnitude of the sliding correlation between a down-chirp and its
/// CFO-shifted copy at integer lag `m`, with `df_fs` normalized to the
/// sampling rate `K*B`. The peak center sits at lag `round(N*K^2*df_fs)`;
/// the overlap count `NK - |m|` is kept exact so the expression matches
/// the time-domain sum at every lag, not just near the peak.
pub fn chirp_xcorr_cfo(m: i64, df_fs: f64, n: u32, k: u32) -> f64 {
    let nk = (n * k) as f64;
    let nk2 = (n * k * k) as f64;
    let ma = m.unsigned_abs() as f64;
    if ma >= nk {
        return 0.0;
    }
    let m_shift = m as f64 - nk2 * df_fs;
    let count = nk - ma;
    ratio_of_sines(m_shift / nk2, count) / nk
}

/// `|sin(pi*x*count) / sin(pi*x)|` with the removable singularity at
/// integer `x` returning `count` (coherent sum of `count` unit phasors).
fn ratio_of_sines(x: f64, count: f64) -> f64 {
    let frac = x - x.round();
    if frac.abs() < 1e-300 {
        return count;
    }
    ((PI * x * count).sin() / (PI * x).sin()).abs()
}

/// Peak magnitude of the chirp correlation under a CFO of `df_b`
/// (normalized to the bandwidth `B`), i.e. the sliding-correlation value
/// at the best integer lag. `de = round(NK*df_b) - NK*df_b` is the
/// fractional peak offset responsible for leakage; the on-grid case
/// `de = 0` returns the full truncated-overlap peak `1 - |round(..)|/NK`.
pub fn corr_peak_cfo(k: u32, df_b: f64, n: u32) -> f64 {
    let nk = (n * k) as f64;
    let nk2 = (n * k * k) as f64;
    let m_star = round_half_away(nk * df_b);
    if m_star.abs() >= nk {
        return 0.0;
    }
    let de = m_star - nk * df_b;
    let count = nk - m_star.abs();
    ratio_of_sines(de / nk2, count) / nk
}

/// Ratio of the sampled correlation peak to the continuous-lag peak
/// `1 - |df_b|`; equals 1 whenever the CFO lands on the lag grid.
pub fn corr_peak_ratio(k: u32, df_b: f64, n: u32) -> f64 {
    let ideal = 1.0 - df_b.abs();
    if ideal <= 0.0 {
        return 0.0;
    }
    corr_peak_cfo(k, df_b, n) / ideal
}

/// Resolution of the coarse CFO estimate from the two chirp peaks:
/// `1/(2*N*K^2)`, normalized to the sampling rate.
pub fn coarse_cfo_resolution(n: u32, k: u32) -> f64 {
    1.0 / (2.0 * (n * k * k) as f64)
}

/// CFAR scale for a target two-chirp false alarm rate over a sliding
/// window of `w` candidate positions:
/// `gamma = sqrt(-(4/pi) * ln(1 - (1 - sqrt(pfa))^(1/w)))`.
pub fn gamma_for_pfa(pfa: f64, w: u32) -> Result<f64, TheoryError> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(TheoryError::PfaRange(pfa));
    }
    if w < 1 {
        return Err(TheoryError::WindowWidth);
    }
    let per_pos = 1.0 - (1.0 - pfa.sqrt()).powf(1.0 / w as f64);
    Ok((-(4.0 / PI) * per_pos.ln()).sqrt())
}

/// Two-chirp false alarm probability for CFAR scale `gamma` and window
/// width `w`: `(1 - (1 - e^(-pi*gamma^2/4))^w)^2`. Exact inverse of
/// [`gamma_for_pfa`]. Independent of the noise power by CFAR construction.
pub fn false_alarm_prob(gamma: f64, w: u32) -> f64 {
    let q = (-PI * gamma * gamma / 4.0).exp();
    let per_chirp = 1.0 - (1.0 - q).powi(w as i32);
    per_chirp * per_chirp
}

/// Preamble detection probability under AWGN (`|h| = 1`), averaged over
/// the CFO prior.
///
/// Per CFO value the peak magnitude is Rician around the leakage-reduced
/// peak `m(x) = corr_peak_cfo(k, x, n)` with matched-filter noise scale
/// `sigma_mf = sigma / sqrt(2N)`, where `sigma = 10^(-snr_db/20)` is the
/// per-chip noise level; both chirps must clear the CFAR threshold
/// `gamma * sqrt(pi/2) * sigma_mf`, so the integrand is the squared
/// Marcum-Q tail. The integral uses composite Simpson refinement to an
/// absolute tolerance of 1e-6; the initial grid resolves the leakage
/// ripple, whose period in `x` is `1/(NK)`.
pub fn detection_prob(gamma: f64, snr_db: f64, n: u32, k: u32, dist: &CfoDistribution) -> f64 {
    let (lo, hi) = dist.bounds();
    let pd_at = |x: f64| detection_prob_at(gamma, snr_db, n, k, x);
    let nk = (n * k) as f64;
    let min_panels = (8.0 * nk * (hi - lo)).ceil() as usize;
    integrate_simpson(pd_at, lo, hi, min_panels.max(64), 1e-6) / (hi - lo)
}

/// Detection probability for one fixed CFO value `x_b` (normalized to B):
/// the integrand of [`detection_prob`].
pub fn detection_prob_at(gamma: f64, snr_db: f64, n: u32, k: u32, x_b: f64) -> f64 {
    let sigma = 10f64.powf(-snr_db / 20.0);
    let sigma_mf = sigma / (2.0 * n as f64).sqrt();
    let b = gamma * (PI / 2.0).sqrt();
    let a = corr_peak_cfo(k, x_b, n) / sigma_mf;
    let p = marcum_q1(a, b);
    p * p
}

/// Composite Simpson with panel doubling until successive estimates agree
/// within `tol` (absolute).
fn integrate_simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, min_panels: usize, tol: f64) -> f64 {
    let mut panels = min_panels.next_power_of_two().max(64);
    let mut prev = simpson_fixed(&f, lo, hi, panels);
    loop {
        panels *= 2;
        let cur = simpson_fixed(&f, lo, hi, panels);
        if (cur - prev).abs() < tol || panels >= 1 << 22 {
            return cur;
        }
        prev = cur;
    }
}

fn simpson_fixed<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + i as f64 * h);
    }
    sum * h / 3.0
}

/// Cramer-Rao lower bound on the variance of the CFO estimate (normalized
/// to the sampling rate) from one 2N-chip preamble with unknown gain and
/// phase: `3 / (4*pi^2 * NK * (4*N^2*K^2 - 1) * snr)` where `snr` is the
/// linear per-sample SNR `|h|^2/sigma^2`.
pub fn crlb_cfo(n: u32, k: u32, snr_h_linear: f64) -> f64 {
    let nk = (n * k) as f64;
    3.0 / (4.0 * PI * PI * nk * (4.0 * nk * nk - 1.0) * snr_h_linear)
}

/// Receiver sensitivity in dBm from thermal noise floor, occupied
/// bandwidth, minimum working SNR, and front-end noise figure.
pub fn receiver_sensitivity_dbm(obw_hz: f64, snr_min_db: f64, nf_db: f64) -> f64 {
    -174.0 + 10.0 * obw_hz.log10() + snr_min_db + nf_db
}

/// Processing gain of an SF_p-chip spreading sequence, in dB.
pub fn spreading_gain_db(sf_p: u32) -> f64 {
    10.0 * (sf_p as f64).log10()
}

/// Matched-filter correlation magnitude of one payload symbol under a
/// constant residual CFO `df_fs` (normalized to the sampling rate):
/// `|sin(pi*df*K*SF_p) / sin(pi*df)| / (K*SF_p)`, with the limit 1 at
/// zero offset. Stays above 0.9 while `|df_fs| < 1/(4*K*SF_p)`.
pub fn residual_cfo_corr(df_fs: f64, k: u32, sf_p: u32) -> f64 {
    let len = (k * sf_p) as f64;
    ratio_of_sines(df_fs, len) / len
}
