//! End-to-end frame composition: transmit-side frame building and the
//! receive chain from raw fine-rate samples to decoded payload bytes.
//! All SNR arguments here are physical per-sample values at the sync
//! rate; the sweep layer converts from per-symbol SNR before calling in.

use modem_core::coding::{
    self, decode_header, decode_payload, encode_frame, header_coded_len, payload_coded_len,
    DecodeError, FrameHeader, SpreadingSequence,
};
use modem_core::demod::{build_matched_filters, demod_payload, MatchedFilterPair};
use modem_core::iq::IqBuffer;
use modem_core::params::PhyParams;
use modem_core::rng::complex_gaussian;
use modem_core::sync::{
    compensate_cfo, detect_preamble, fine_sync, Correlator, DetectorConfig, SyncError, SyncReport,
};
use modem_core::waveform::{assemble_frame, cpfsk_modulate, Frame};
use num_complex::Complex64;
use rand::Rng;

/// A built transmit frame at the fine rate, with everything needed to
/// score the receive side.
pub struct TxFrame {
    pub frame: Frame,
    pub header: FrameHeader,
    pub payload: Vec<u8>,
}

/// Builds one frame: header, coded/spread payload, preamble, all at the
/// upsampled rate `R*K*B`.
pub fn build_tx_frame(p: &PhyParams, payload: &[u8], d: &SpreadingSequence) -> TxFrame {
    let header = FrameHeader {
        payload_len: payload.len() as u8,
        code_rate_idx: p.code_rate.index(),
        crc_present: true,
        mod_type: 0,
    };
    let (_enc, chips) = encode_frame(payload, &header, d);
    let header_chips_len = header_coded_len() * d.len();
    let header_chips = chips[..header_chips_len].to_vec();
    let payload_chips = chips[header_chips_len..].to_vec();
    let frame = assemble_frame(p, header_chips, payload_chips, p.r);
    TxFrame { frame, header, payload: payload.to_vec() }
}

/// True synchronization parameters, used to bypass the detector when
/// measuring demodulation bounds.
#[derive(Debug, Clone, Copy)]
pub struct IdealSyncInfo {
    pub tau_fine: usize,
    pub df_fs: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum LinkError {
    #[error("preamble not detected")]
    NotDetected,
    #[error("sync: {0}")]
    Sync(#[from] SyncError),
    #[error("buffer too short for payload extraction")]
    BufferShort,
    #[error("{0}")]
    Decode(#[from] DecodeError),
    #[error("demod: {0}")]
    Demod(#[from] modem_core::demod::DemodError),
}

/// Decoded frame plus receiver diagnostics.
pub struct RxFrame {
    pub header: FrameHeader,
    pub payload: Vec<u8>,
    pub sync: Option<SyncReport>,
    pub header_soft: Vec<f64>,
    pub payload_soft: Vec<f64>,
}

/// Extracts `count` sync-rate samples starting at a fine-rate index and
/// derotates them by the CFO estimate.
fn extract_compensated(
    r_fine: &IqBuffer,
    start_fine: i64,
    count: usize,
    r: u32,
    df: f64,
) -> Result<IqBuffer, LinkError> {
    let last = start_fine + (count as i64 - 1) * r as i64;
    if start_fine < 0 || last >= r_fine.len() as i64 {
        return Err(LinkError::BufferShort);
    }
    let samples: Vec<Complex64> = (0..count)
        .map(|n| r_fine.samples[(start_fine + n as i64 * r as i64) as usize])
        .collect();
    Ok(compensate_cfo(&IqBuffer::new(samples, 1), df))
}

/// Full receive chain on a fine-rate buffer: synchronize (or take the
/// supplied truth), slice the header and payload symbols at the sync
/// rate, demodulate non-coherently, and run the decode chain. The header
/// tells the receiver how many payload symbols to take; a header
/// checksum failure aborts before any payload work.
pub fn receive_frame(
    r_fine: &IqBuffer,
    p: &PhyParams,
    det: &DetectorConfig,
    corr: &dyn Correlator,
    d: &SpreadingSequence,
    ideal: Option<IdealSyncInfo>,
) -> Result<RxFrame, LinkError> {
    let (tau_fine_est, df_est, sync) = match ideal {
        Some(info) => (info.tau_fine as i64, info.df_fs, None),
        None => {
            let sync_buf = r_fine.decimate(p.r);
            let rep = detect_preamble(&sync_buf, p, det, corr);
            if !rep.detected {
                return Err(LinkError::NotDetected);
            }
            let coarse = rep.coarse.expect("detected implies coarse");
            let fine = fine_sync(r_fine, &coarse, p)?;
            let tau_fine = coarse.mu * p.r as i64 + fine.eps_r;
            let full = SyncReport { fine: Some(fine), ..rep };
            (tau_fine, fine.df, Some(full))
        }
    };

    let mf = build_matched_filters(d, p);
    let sym = p.symbol_len();
    let r_step = p.r;
    let pay_start = tau_fine_est + (p.preamble_len() as i64) * p.r as i64;

    // Header region first; its length is fixed by the frame format.
    let n_header = header_coded_len();
    let hdr_buf = extract_compensated(r_fine, pay_start, n_header * sym, r_step, df_est)?;
    let header_soft = demod_payload(&hdr_buf, 0, n_header, &mf)?;
    let header = decode_header(&header_soft)?;

    // Payload region, sized by the decoded length field.
    let l = header.payload_len as usize;
    let n_payload = payload_coded_len(l);
    let pay_fine = pay_start + (n_header * sym) as i64 * r_step as i64;
    let pay_buf = extract_compensated(r_fine, pay_fine, n_payload * sym, r_step, df_est)?;
    let payload_soft = demod_payload(&pay_buf, 0, n_payload, &mf)?;
    let payload = decode_payload(&payload_soft, l)?;

    Ok(RxFrame { header, payload, sync, header_soft, payload_soft })
}

/// Uncoded single-link measurement: random bits are spread, modulated,
/// passed through AWGN at the given per-sample SNR with ideal timing, and
/// sliced by metric sign. Returns (bit errors, bits sent).
pub fn uncoded_ber_trial(
    p: &PhyParams,
    d: &SpreadingSequence,
    mf: &MatchedFilterPair,
    snr_sample_db: f64,
    n_bits: usize,
    rng: &mut impl Rng,
) -> (usize, usize) {
    let bits: Vec<u8> = (0..n_bits).map(|_| rng.random_range(0..2u8)).collect();
    let chips = coding::spread(&bits, d);
    let tx = cpfsk_modulate(&chips, p, 1);
    let sigma = modem_core::channel::snr_to_sigma(snr_sample_db);
    let rx = IqBuffer::new(
        tx.samples.iter().map(|s| s + complex_gaussian(rng, sigma)).collect(),
        1,
    );
    let soft = demod_payload(&rx, 0, n_bits, mf).expect("sized by construction");
    let errors = soft
        .iter()
        .zip(&bits)
        .filter(|(s, &b)| (**s > 0.0) != (b == 1))
        .count();
    (errors, n_bits)
}
