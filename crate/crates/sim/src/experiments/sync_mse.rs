//! Synchronization-quality sweep: squared errors of the timing and CFO
//! estimates with the detector's threshold tests disabled, so estimation
//! quality is measured without detection failures. The CSV carries the
//! CFO CRLB column for comparison.

use crate::config::SweepConfig;
use crate::csv::{fmt_float, CsvTable};
use crate::experiments::{draw_trial, run_trials, RunOutput};
use anyhow::Result;
use modem_core::channel::{apply_channel, ChannelSpec};
use modem_core::sync::{correlator_by_name, detect_preamble, fine_sync, DetectorConfig};
use modem_core::theory::crlb_cfo;
use modem_core::waveform::gen_preamble;

/// Aggregates for one SNR point. MSEs use only trials whose fine stage
/// ran (with thresholds skipped that is effectively all of them).
#[derive(Debug, Clone)]
pub struct MsePoint {
    pub snr_db: f64,
    pub trials: usize,
    pub used: usize,
    pub sto_mse_chips2: f64,
    pub cfo_mse: f64,
    pub crlb: f64,
}

pub fn run_sync_mse_sweep(cfg: &SweepConfig) -> Result<Vec<MsePoint>> {
    let p = cfg.params.clone();
    let det = DetectorConfig {
        gamma: cfg.gamma,
        eta: cfg.eta,
        skip_threshold: true,
        ..DetectorConfig::for_params(&p)
    };
    let corr = correlator_by_name(&cfg.corr_backend).map_err(|e| anyhow::anyhow!("{e}"))?;
    let corr = corr.as_ref();
    let preamble = gen_preamble(&p, p.r);
    let (_, hi_chips) = cfg.sto_case.bounds_chips(p.n);
    let out_len = (hi_chips * (p.k * p.r) as f64).ceil() as usize
        + preamble.len()
        + 2 * p.nk() * p.r as usize;

    let mut points = Vec::new();
    for (pi, &snr_db) in cfg.snr_points.iter().enumerate() {
        let snr_sample = cfg.snr_sample_db(snr_db);
        let outcomes = run_trials(cfg.seed, pi, cfg.n_trials, |_t, mut rng| {
            let draw = draw_trial(cfg, &mut rng);
            let spec = ChannelSpec {
                gain: draw.gain,
                kind: cfg.channel,
                df_fs: draw.df_fs,
                tau_fine: draw.tau_fine,
                snr_db: snr_sample,
            };
            let rx_fine = apply_channel(&preamble, &spec, &mut rng, out_len).expect("sized");
            let rx = rx_fine.decimate(p.r);
            let rep = detect_preamble(&rx, &p, &det, corr);
            let coarse = rep.coarse?;
            let fine = fine_sync(&rx_fine, &coarse, &p).ok()?;
            let tau_sync = draw.tau_fine as f64 / p.r as f64;
            let sto_err_chips = (fine.tau - tau_sync) / p.k as f64;
            let cfo_err = fine.df - draw.df_fs;
            Some((sto_err_chips * sto_err_chips, cfo_err * cfo_err))
        });
        let mut used = 0usize;
        let mut sto_sum = 0.0;
        let mut cfo_sum = 0.0;
        for o in outcomes.into_iter().flatten() {
            used += 1;
            sto_sum += o.0;
            cfo_sum += o.1;
        }
        let snr_h = 10f64.powf(snr_sample / 10.0);
        points.push(MsePoint {
            snr_db,
            trials: cfg.n_trials,
            used,
            sto_mse_chips2: if used > 0 { sto_sum / used as f64 } else { f64::NAN },
            cfo_mse: if used > 0 { cfo_sum / used as f64 } else { f64::NAN },
            crlb: crlb_cfo(p.n, p.k, snr_h),
        });
    }
    Ok(points)
}

pub fn run(cfg: &SweepConfig) -> Result<RunOutput> {
    let points = run_sync_mse_sweep(cfg)?;
    let mut table = CsvTable::new("sync_mse", cfg.seed, &cfg.canonical());
    table.comment("threshold tests disabled; errors over all trials");
    table.comment("cfo_mse and crlb are in squared sync-rate-normalized frequency units");
    table.header(&["snr_db", "n_trials", "used", "sto_mse_chips2", "cfo_mse", "crlb_cfo"]);
    let mut summary = String::new();
    for pt in &points {
        table.row(&[
            fmt_float(pt.snr_db),
            pt.trials.to_string(),
            pt.used.to_string(),
            fmt_float(pt.sto_mse_chips2),
            fmt_float(pt.cfo_mse),
            fmt_float(pt.crlb),
        ]);
        summary.push_str(&format!(
            "snr {:+.1} dB: cfo mse {:.3e} (crlb {:.3e})\n",
            pt.snr_db, pt.cfo_mse, pt.crlb
        ));
    }
    Ok(RunOutput { body: table.finish(), ok: true, summary })
}
