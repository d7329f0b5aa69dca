//! End-to-end packet error rate sweep: every trial encodes a random
//! payload, sends one full frame through the channel, and runs the
//! complete receiver. With `ideal_sync` the detector is bypassed and the
//! true timing/CFO are fed in, which gives the demodulation lower bound.

use crate::config::SweepConfig;
use crate::csv::{fmt_float, wilson_interval, CsvTable};
use crate::experiments::{draw_trial, resolve_sequence, run_trials, RunOutput};
use crate::link::{build_tx_frame, receive_frame, IdealSyncInfo, LinkError};
use anyhow::Result;
use modem_core::channel::{apply_channel, snr_to_sigma, ChannelSpec};
use modem_core::coding::SpreadingSequence;
use modem_core::demod::build_matched_filters;
use modem_core::sync::{correlator_by_name, DetectorConfig};
use rand::Rng;

/// Aggregates for one SNR point, with errors broken out by cause.
#[derive(Debug, Clone)]
pub struct PerPoint {
    pub snr_db: f64,
    pub frames: usize,
    pub errors: usize,
    pub miss_errors: usize,
    pub header_errors: usize,
    pub payload_errors: usize,
    pub per: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

enum FrameOutcome {
    Ok,
    Miss,
    Header,
    Payload,
}

pub fn run_per_sweep(cfg: &SweepConfig) -> Result<Vec<PerPoint>> {
    let p = cfg.params.clone();
    let d = resolve_sequence(cfg)?;
    let det = DetectorConfig {
        gamma: cfg.gamma,
        eta: cfg.eta,
        ..DetectorConfig::for_params(&p)
    };
    let corr = correlator_by_name(&cfg.corr_backend).map_err(|e| anyhow::anyhow!("{e}"))?;
    let corr = corr.as_ref();
    let (_, hi_chips) = cfg.sto_case.bounds_chips(p.n);
    let tau_max = (hi_chips * (p.k * p.r) as f64).ceil() as usize + p.r as usize;

    let mut points = Vec::new();
    for (pi, &snr_db) in cfg.snr_points.iter().enumerate() {
        let snr_sample = cfg.snr_sample_db(snr_db);
        let outcomes = run_trials(cfg.seed, pi, cfg.n_trials, |_t, mut rng| {
            let draw = draw_trial(cfg, &mut rng);
            let payload: Vec<u8> = (0..p.payload_len).map(|_| rng.random::<u8>()).collect();
            let tx = build_tx_frame(&p, &payload, &d);
            let spec = ChannelSpec {
                gain: draw.gain,
                kind: cfg.channel,
                df_fs: draw.df_fs,
                tau_fine: draw.tau_fine,
                snr_db: snr_sample,
            };
            let out_len = tx.frame.combined.len() + tau_max + 2 * p.nk() * p.r as usize;
            let rx_fine = apply_channel(&tx.frame.combined, &spec, &mut rng, out_len)
                .expect("sized buffer");
            let ideal = cfg
                .ideal_sync
                .then_some(IdealSyncInfo { tau_fine: draw.tau_fine, df_fs: draw.df_fs });
            match receive_frame(&rx_fine, &p, &det, corr, &d, ideal) {
                Ok(rx) if rx.payload == payload => FrameOutcome::Ok,
                Ok(_) => FrameOutcome::Payload, // undetected CRC escape
                Err(LinkError::NotDetected) => FrameOutcome::Miss,
                Err(LinkError::Decode(modem_core::coding::DecodeError::Header(_))) => {
                    FrameOutcome::Header
                }
                Err(_) => FrameOutcome::Payload,
            }
        });
        let mut pt = PerPoint {
            snr_db,
            frames: cfg.n_trials,
            errors: 0,
            miss_errors: 0,
            header_errors: 0,
            payload_errors: 0,
            per: 0.0,
            wilson_lo: 0.0,
            wilson_hi: 0.0,
        };
        for o in outcomes {
            match o {
                FrameOutcome::Ok => {}
                FrameOutcome::Miss => {
                    pt.errors += 1;
                    pt.miss_errors += 1;
                }
                FrameOutcome::Header => {
                    pt.errors += 1;
                    pt.header_errors += 1;
                }
                FrameOutcome::Payload => {
                    pt.errors += 1;
                    pt.payload_errors += 1;
                }
            }
        }
        pt.per = pt.errors as f64 / pt.frames as f64;
        let (lo, hi) = wilson_interval(pt.errors, pt.frames);
        pt.wilson_lo = lo;
        pt.wilson_hi = hi;
        points.push(pt);
    }
    Ok(points)
}

pub fn run(cfg: &SweepConfig) -> Result<RunOutput> {
    let points = run_per_sweep(cfg)?;
    let mut table = CsvTable::new("per", cfg.seed, &cfg.canonical());
    table.comment("per = frames failing detection, header check, or payload CRC");
    table.header(&[
        "snr_db",
        "frames",
        "errors",
        "per",
        "wilson95_lo",
        "wilson95_hi",
        "miss_errors",
        "header_errors",
        "payload_errors",
    ]);
    let mut summary = String::new();
    for pt in &points {
        table.row(&[
            fmt_float(pt.snr_db),
            pt.frames.to_string(),
            pt.errors.to_string(),
            fmt_float(pt.per),
            fmt_float(pt.wilson_lo),
            fmt_float(pt.wilson_hi),
            pt.miss_errors.to_string(),
            pt.header_errors.to_string(),
            pt.payload_errors.to_string(),
        ]);
        summary.push_str(&format!("snr {:+.1} dB: PER = {:.4}\n", pt.snr_db, pt.per));
    }
    Ok(RunOutput { body: table.finish(), ok: true, summary })
}

/// Uncoded BER point, used to measure the raw spreading gain.
#[derive(Debug, Clone)]
pub struct UncodedBerPoint {
    pub snr_db: f64,
    pub bits: usize,
    pub errors: usize,
    pub ber: f64,
}

/// Ideal-sync uncoded bit error rate over the configured SNR points.
pub fn run_uncoded_ber_sweep(
    cfg: &SweepConfig,
    d: &SpreadingSequence,
    bits_per_point: usize,
) -> Vec<UncodedBerPoint> {
    let p = cfg.params.clone();
    let mf = build_matched_filters(d, &p);
    let chunk = 10_000usize;
    cfg.snr_points
        .iter()
        .enumerate()
        .map(|(pi, &snr_db)| {
            let snr_sample = cfg.snr_sample_db(snr_db);
            let n_chunks = bits_per_point.div_ceil(chunk);
            let results = run_trials(cfg.seed, pi, n_chunks, |_t, mut rng| {
                crate::link::uncoded_ber_trial(&p, d, &mf, snr_sample, chunk, &mut rng)
            });
            let errors: usize = results.iter().map(|r| r.0).sum();
            let bits: usize = results.iter().map(|r| r.1).sum();
            let _ = snr_to_sigma(snr_sample);
            UncodedBerPoint { snr_db, bits, errors, ber: errors as f64 / bits as f64 }
        })
        .collect()
}
