//! Symbol-level non-coherent joint despreading and demodulation.
//!
//! One whole spread bit (SF_p chips of MSK) is treated as a single
//! symbol and matched against the two candidate waveforms; the decision
//! uses only correlation magnitudes, so any constant phase rotation of a
//! symbol (accumulated CPFSK phase, channel phase, residual CFO phase)
//! drops out. The soft metric per bit is the difference of the two
//! envelope outputs and feeds the Viterbi decoder unquantized.

use crate::coding::SpreadingSequence;
use crate::iq::IqBuffer;
use crate::params::PhyParams;
use crate::waveform::cpfsk_modulate;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Soft demodulation metrics, one per despread bit.
pub type SoftVec = Vec<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum DemodError {
    #[error("symbol slice of {got} samples, expected {want}")]
    SymbolLength { got: usize, want: usize },
    #[error("buffer of {len} samples cannot hold {n_bits} symbols of {sym} from offset {start}")]
    BufferTooShort { len: usize, n_bits: usize, sym: usize, start: usize },
}

/// Matched-filter pair for one spreading sequence: the reference
/// waveforms for symbols '1' and '0' (each the conjugate of the other)
/// and their normalized correlation magnitude, which is zero exactly for
/// orthogonality-satisfying sequences and sets the attainable error rate.
#[derive(Debug, Clone)]
pub struct MatchedFilterPair {
    pub mf1: IqBuffer,
    pub mf0: IqBuffer,
    pub rho_dm: f64,
}

/// Builds the symbol matched filters by modulating the sequence (for '1')
/// and its negation (for '0'); with a rectangular phase pulse the '0'
/// waveform is the elementwise conjugate of the '1' waveform.
pub fn build_matched_filters(d: &SpreadingSequence, p: &PhyParams) -> MatchedFilterPair {
    let chips = d.chips().to_vec();
    let mf1 = cpfsk_modulate(&chips, p, 1);
    let mf0 = IqBuffer::new(mf1.samples.iter().map(|s| s.conj()).collect(), 1);
    let rho_dm = rho_dm(d, p);
    MatchedFilterPair { mf1, mf0, rho_dm }
}

/// Normalized correlation magnitude between the two symbol waveforms,
/// computed from the time-domain sum.
pub fn rho_dm(d: &SpreadingSequence, p: &PhyParams) -> f64 {
    let mf1 = cpfsk_modulate(&d.chips().to_vec(), p, 1);
    // s0 = conj(s1), so s1 * conj(s0) = s1^2.
    let sum: Complex64 = mf1.samples.iter().map(|s| s * s).sum();
    sum.norm() / mf1.len() as f64
}

/// The same correlation coefficient in algebraic form (MSK only,
/// h_m = 1/2): chip-level correlations collapse to
/// `|sum_l (-1)^l exp(j*pi*(K-1)*d[l]/(2K))| / (K*SF_p*sin(pi/(2K)))`.
pub fn rho_dm_closed(d: &SpreadingSequence, k: u32) -> f64 {
    let kf = k as f64;
    let sum: Complex64 = d
        .chips()
        .iter()
        .enumerate()
        .map(|(l, &dl)| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sign * Complex64::from_polar(1.0, PI * (kf - 1.0) / (2.0 * kf) * dl as f64)
        })
        .sum();
    sum.norm() / (kf * d.len() as f64 * (PI / (2.0 * kf)).sin())
}

/// Orthogonality criterion: the alternating chip sum must vanish.
pub fn check_orthogonal(d: &SpreadingSequence) -> bool {
    crate::coding::alternating_sum(d.chips()) == 0
}

/// Non-coherent demodulation of one symbol: envelope outputs of the two
/// matched filters and their difference as the soft metric. Invariant to
/// any constant phase rotation of the input.
pub fn demod_symbol(r_sym: &[Complex64], mf: &MatchedFilterPair) -> Result<(f64, f64, f64), DemodError> {
    let want = mf.mf1.len();
    if r_sym.len() != want {
        return Err(DemodError::SymbolLength { got: r_sym.len(), want });
    }
    let mut acc1 = Complex64::new(0.0, 0.0);
    let mut acc0 = Complex64::new(0.0, 0.0);
    for (n, &r) in r_sym.iter().enumerate() {
        acc1 += r * mf.mf1.samples[n].conj();
        acc0 += r * mf.mf0.samples[n].conj();
    }
    let z1 = acc1.norm();
    let z0 = acc0.norm();
    Ok((z1 - z0, z1, z0))
}

/// Partitions the buffer into consecutive symbols from `start` and emits
/// one soft metric per symbol. No phase tracking happens across symbols;
/// each symbol's envelope stands alone.
pub fn demod_payload(
    r: &IqBuffer,
    start: usize,
    n_bits: usize,
    mf: &MatchedFilterPair,
) -> Result<SoftVec, DemodError> {
    let sym = mf.mf1.len();
    if start + n_bits * sym > r.len() {
        return Err(DemodError::BufferTooShort { len: r.len(), n_bits, sym, start });
    }
    (0..n_bits)
        .map(|q| {
            let lo = start + q * sym;
            demod_symbol(&r.samples[lo..lo + sym], mf).map(|(l, _, _)| l)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> PhyParams {
        PhyParams::default()
    }

    fn seq(chips: Vec<i8>) -> SpreadingSequence {
        SpreadingSequence::new(chips).unwrap()
    }

    #[test]
    fn single_chip_filter_is_msk_chip() {
        let p = params();
        let d = seq(vec![1]);
        let mf = build_matched_filters(&d, &p);
        let chip = cpfsk_modulate(&vec![1], &p, 1);
        assert_eq!(mf.mf1.samples, chip.samples);
        for (a, b) in mf.mf0.samples.iter().zip(&mf.mf1.samples) {
            assert_eq!(*a, b.conj());
        }
    }

    #[test]
    fn orthogonal_sequence_has_zero_rho() {
        let p = params();
        let mf = build_matched_filters(&seq(vec![1, 1, 1, 1]), &p);
        assert!(mf.rho_dm < 1e-12, "rho = {}", mf.rho_dm);
    }

    #[test]
    fn alternating_sequence_rho_values() {
        // The alternating sequence maximizes the alternating sum; at the
        // default K = 2 both evaluation routes give 1/2. (At K = 1 the
        // per-chip phase rotation vanishes and rho collapses to 0 for any
        // even-length sequence, which is why K = 1 gives the receiver no
        // orthogonality discrimination.)
        let d = seq(vec![1, -1, 1, -1]);
        let p2 = params();
        assert!((rho_dm(&d, &p2) - 0.5).abs() < 1e-12);
        assert!((rho_dm_closed(&d, 2) - 0.5).abs() < 1e-12);
        let p1 = PhyParams { k: 1, ..params() };
        assert!(rho_dm(&d, &p1) < 1e-12);
        assert!(rho_dm_closed(&d, 1) < 1e-12);
    }

    #[test]
    fn pairwise_imbalanced_sequence() {
        let d = seq(vec![1, -1]);
        assert!(!check_orthogonal(&d));
        assert!((rho_dm(&d, &params()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let len = rng.random_range(2..=16usize);
            let chips: Vec<i8> = (0..len).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let d = seq(chips);
            for k in [1u32, 2, 4] {
                let p = PhyParams { k, ..params() };
                let a = rho_dm(&d, &p);
                let b = rho_dm_closed(&d, k);
                assert!((a - b).abs() < 1e-9, "{d} K={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn orthogonality_flag_matches_rho_exhaustively() {
        let p = params();
        for bits in 0..16u32 {
            let chips: Vec<i8> = (0..4).map(|i| if (bits >> i) & 1 == 1 { 1 } else { -1 }).collect();
            let d = seq(chips);
            let rho = rho_dm(&d, &p);
            assert_eq!(check_orthogonal(&d), rho < 1e-12, "{d}: rho = {rho}");
        }
    }

    #[test]
    fn noiseless_symbol_metrics() {
        let p = params();
        let d = seq(vec![1, 1, 1, 1]);
        let mf = build_matched_filters(&d, &p);
        let sym = mf.mf1.len() as f64;
        let (l, z1, z0) = demod_symbol(&mf.mf1.samples, &mf).unwrap();
        assert!((z1 - sym).abs() < 1e-9);
        assert!(z0 < 1e-9);
        assert!((l - sym).abs() < 1e-9);
        // Symbol '0' mirrors it.
        let (l0, _, _) = demod_symbol(&mf.mf0.samples, &mf).unwrap();
        assert!((l0 + sym).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let p = params();
        let mf = build_matched_filters(&seq(vec![1, 1, 1, 1]), &p);
        let short = vec![Complex64::new(1.0, 0.0); 3];
        assert!(matches!(
            demod_symbol(&short, &mf),
            Err(DemodError::SymbolLength { .. })
        ));
    }

    #[test]
    fn payload_partitioning_recovers_bits() {
        let p = params();
        let d = seq(vec![1, -1, -1, 1, -1, 1, 1, -1]);
        let mf = build_matched_filters(&d, &p);
        let bits = vec![1u8, 0, 1, 1, 0, 0, 1, 0];
        let chips = crate::coding::spread(&bits, &d);
        let tx = cpfsk_modulate(&chips, &p, 1);
        let soft = demod_payload(&tx, 0, bits.len(), &mf).unwrap();
        for (s, &b) in soft.iter().zip(&bits) {
            assert_eq!(*s > 0.0, b == 1, "soft {s} for bit {b}");
        }
    }

    #[test]
    fn small_residual_cfo_keeps_signs_and_peak() {
        // Per-symbol phase ramp below 1/(4*K*SF_p) keeps every decision
        // and at least 90% of the correlation peak.
        let p = params();
        let d = SpreadingSequence::default_for(p.sf_p).unwrap();
        let mf = build_matched_filters(&d, &p);
        let bits = vec![1u8, 0, 0, 1, 1, 0, 1, 0, 1, 1];
        let chips = crate::coding::spread(&bits, &d);
        let tx = cpfsk_modulate(&chips, &p, 1);
        let df = 0.9 / (4.0 * p.symbol_len() as f64);
        let rx = IqBuffer::new(
            tx.samples
                .iter()
                .enumerate()
                .map(|(n, s)| s * Complex64::from_polar(1.0, std::f64::consts::TAU * df * n as f64))
                .collect(),
            1,
        );
        let soft = demod_payload(&rx, 0, bits.len(), &mf).unwrap();
        let sym = p.symbol_len();
        for (s, &b) in soft.iter().zip(&bits) {
            assert_eq!(*s > 0.0, b == 1);
        }
        // The matched branch keeps at least 90% of its peak.
        for (q, &b) in bits.iter().enumerate() {
            let (_, z1, z0) = demod_symbol(&rx.samples[q * sym..(q + 1) * sym], &mf).unwrap();
            let matched = if b == 1 { z1 } else { z0 };
            assert!(
                matched > 0.9 * sym as f64,
                "bit {q}: kept {} of peak",
                matched / sym as f64
            );
        }
    }

    proptest! {
        #[test]
        fn phase_rotation_invariance(theta in 0.0..std::f64::consts::TAU, flip in any::<bool>()) {
            let p = params();
            let d = seq(vec![1, 1, 1, 1]);
            let mf = build_matched_filters(&d, &p);
            let base = if flip { &mf.mf0 } else { &mf.mf1 };
            let rotated: Vec<Complex64> = base
                .samples
                .iter()
                .map(|s| s * Complex64::from_polar(1.0, theta))
                .collect();
            let (l_rot, _, _) = demod_symbol(&rotated, &mf).unwrap();
            let (l_ref, _, _) = demod_symbol(&base.samples, &mf).unwrap();
            prop_assert!((l_rot - l_ref).abs() < 1e-9);
        }
    }
}
