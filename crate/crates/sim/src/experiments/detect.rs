//! Preamble detection sweep: per SNR point, each trial runs the detector
//! once on a pure-noise buffer (false-alarm tally) and once on a
//! preamble-plus-noise buffer (miss/detect tally). A trial counts as a
//! successful detection when the packet start lands within one chip of
//! the truth.

use crate::config::SweepConfig;
use crate::csv::{fmt_float, CsvTable};
use crate::experiments::{draw_trial, run_trials, RunOutput};
use anyhow::Result;
use modem_core::channel::{apply_channel, gen_noise, snr_to_sigma, ChannelKind, ChannelSpec};
use modem_core::params::PhyParams;
use modem_core::sync::{correlator_by_name, detect_preamble, DetectorConfig};
use modem_core::theory::{detection_prob, detection_prob_at, CfoDistribution};
use modem_core::waveform::gen_preamble;
use rayon::prelude::*;

/// Aggregated results for one SNR point.
#[derive(Debug, Clone)]
pub struct DetectPoint {
    pub snr_db: f64,
    pub trials: usize,
    /// CFAR fired on the signal buffer (any position).
    pub fired: usize,
    /// Fired with the packet start within one chip.
    pub success: usize,
    pub false_alarms: usize,
    pub noise_windows: usize,
    pub pd_theory: f64,
}

struct TrialOutcome {
    fired: bool,
    success: bool,
    false_alarm: bool,
    noise_windows: usize,
}

fn detector_config(cfg: &SweepConfig) -> DetectorConfig {
    DetectorConfig {
        gamma: cfg.gamma,
        eta: cfg.eta,
        ..DetectorConfig::for_params(&cfg.params)
    }
}

/// Fine-rate buffer length that fits the worst-case delay plus the
/// preamble and leaves the detector full windows at the end.
fn buffer_len_fine(cfg: &SweepConfig) -> usize {
    let p = &cfg.params;
    let (_, hi_chips) = cfg.sto_case.bounds_chips(p.n);
    let tau_max = (hi_chips * (p.k * p.r) as f64).ceil() as usize + p.r as usize;
    tau_max + p.preamble_len() * p.r as usize + 2 * p.nk() * p.r as usize
}

/// Runs the detection sweep over all configured SNR points.
pub fn run_detect_sweep(cfg: &SweepConfig) -> Result<Vec<DetectPoint>> {
    let p = cfg.params.clone();
    let det = detector_config(cfg);
    let corr = correlator_by_name(&cfg.corr_backend).map_err(|e| anyhow::anyhow!("{e}"))?;
    let corr = corr.as_ref();
    let preamble = gen_preamble(&p, p.r);
    let out_len = buffer_len_fine(cfg);
    let theory_dist = (cfg.cfo_hi_b > cfg.cfo_lo_b)
        .then(|| CfoDistribution::uniform(cfg.cfo_lo_b, cfg.cfo_hi_b))
        .transpose()
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut points = Vec::with_capacity(cfg.snr_points.len());
    for (pi, &snr_db) in cfg.snr_points.iter().enumerate() {
        let snr_sample = cfg.snr_sample_db(snr_db);
        let sigma = snr_to_sigma(snr_sample);
        let outcomes = run_trials(cfg.seed, pi, cfg.n_trials, |_t, mut rng| {
            let draw = draw_trial(cfg, &mut rng);
            let spec = ChannelSpec {
                gain: draw.gain,
                kind: cfg.channel,
                df_fs: draw.df_fs,
                tau_fine: draw.tau_fine,
                snr_db: snr_sample,
            };
            let rx_fine =
                apply_channel(&preamble, &spec, &mut rng, out_len).expect("sized buffer");
            let rx = rx_fine.decimate(p.r);
            let rep = detect_preamble(&rx, &p, &det, corr);
            let tau_sync = draw.tau_fine as f64 / p.r as f64;
            let success = rep
                .coarse
                .map(|c| (c.mu as f64 - tau_sync).abs() <= p.k as f64)
                .unwrap_or(false);

            let noise = gen_noise(&mut rng, out_len / p.r as usize, sigma);
            let nrep = detect_preamble(&noise, &p, &det, corr);
            TrialOutcome {
                fired: rep.detected,
                success,
                false_alarm: nrep.detected,
                noise_windows: nrep.windows_scanned,
            }
        });

        let pd_theory = match (&theory_dist, cfg.channel) {
            (_, ChannelKind::RayleighFlat) => f64::NAN, // closed form is AWGN-only
            (Some(dist), _) => detection_prob(cfg.gamma, snr_db, p.n, p.k, dist),
            (None, _) => detection_prob_at(cfg.gamma, snr_db, p.n, p.k, cfg.cfo_lo_b),
        };
        let mut point = DetectPoint {
            snr_db,
            trials: cfg.n_trials,
            fired: 0,
            success: 0,
            false_alarms: 0,
            noise_windows: 0,
            pd_theory,
        };
        for o in outcomes {
            point.fired += o.fired as usize;
            point.success += o.success as usize;
            point.false_alarms += o.false_alarm as usize;
            point.noise_windows += o.noise_windows;
        }
        points.push(point);
    }
    Ok(points)
}

pub fn run(cfg: &SweepConfig) -> Result<RunOutput> {
    let points = run_detect_sweep(cfg)?;
    let mut table = CsvTable::new("detect", cfg.seed, &cfg.canonical());
    table.comment("snr_db is per-symbol SNR; rates from n_trials Monte-Carlo trials");
    table.header(&[
        "snr_db",
        "n_trials",
        "fired",
        "success",
        "missed",
        "p_d",
        "p_m",
        "false_alarms",
        "noise_windows",
        "p_fa_per_window",
        "p_d_theory",
        "p_m_theory",
    ]);
    let mut summary = String::new();
    for pt in &points {
        let p_d = pt.success as f64 / pt.trials as f64;
        let p_fa = if pt.noise_windows > 0 {
            pt.false_alarms as f64 / pt.noise_windows as f64
        } else {
            0.0
        };
        table.row(&[
            fmt_float(pt.snr_db),
            pt.trials.to_string(),
            pt.fired.to_string(),
            pt.success.to_string(),
            (pt.trials - pt.success).to_string(),
            fmt_float(p_d),
            fmt_float(1.0 - p_d),
            pt.false_alarms.to_string(),
            pt.noise_windows.to_string(),
            fmt_float(p_fa),
            fmt_float(pt.pd_theory),
            fmt_float(1.0 - pt.pd_theory),
        ]);
        summary.push_str(&format!("snr {:+.1} dB: P_D = {p_d:.4}\n", pt.snr_db));
    }
    Ok(RunOutput { body: table.finish(), ok: true, summary })
}

/// Measures the per-window false alarm rate of the full two-chirp test on
/// pure noise, using the live window-advance policy. Runs chunks of
/// windows in parallel; returns (detections, windows examined).
pub fn measure_false_alarm_rate(
    p: &PhyParams,
    det: &DetectorConfig,
    backend: &str,
    n_windows: usize,
    sigma: f64,
    seed: u64,
) -> Result<(usize, usize)> {
    let corr = correlator_by_name(backend).map_err(|e| anyhow::anyhow!("{e}"))?;
    let corr = corr.as_ref();
    let per_chunk = 16usize;
    let n_chunks = n_windows.div_ceil(per_chunk);
    let len = per_chunk * det.w_d + p.nk() + det.w_u / 2 + p.nk();
    let results: Vec<(usize, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = modem_core::rng::RandomStream::new(seed, c as u64).rng();
            let noise = gen_noise(&mut rng, len, sigma);
            let rep = detect_preamble(&noise, p, det, corr);
            (rep.detected as usize, rep.windows_scanned)
        })
        .collect();
    let fires = results.iter().map(|r| r.0).sum();
    let windows = results.iter().map(|r| r.1).sum();
    Ok((fires, windows))
}
