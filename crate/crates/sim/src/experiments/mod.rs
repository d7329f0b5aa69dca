//! Experiment registry: every experiment implements one trait and is
//! selected by name at runtime.

mod detect;
mod loopback;
mod per;
mod seqcheck;
mod sync_mse;
mod theory_curves;

pub use detect::{measure_false_alarm_rate, run_detect_sweep, DetectPoint};
pub use loopback::{run_loopback, LoopbackReport};
pub use per::{run_per_sweep, run_uncoded_ber_sweep, PerPoint, UncodedBerPoint};
pub use sync_mse::{run_sync_mse_sweep, MsePoint};

use crate::config::SweepConfig;
use anyhow::{anyhow, Result};
use modem_core::coding::SpreadingSequence;
use modem_core::rng::RandomStream;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// What one experiment run produced: a CSV (or textual report) body and
/// an overall pass/fail used for the process exit status.
pub struct RunOutput {
    pub body: String,
    pub ok: bool,
    pub summary: String,
}

/// One runnable experiment.
pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, cfg: &SweepConfig) -> Result<RunOutput>;
}

struct DetectExperiment;
struct SyncMseExperiment;
struct PerExperiment;
struct LoopbackExperiment;
struct TheoryExperiment;
struct SeqcheckExperiment;

impl Experiment for DetectExperiment {
    fn name(&self) -> &'static str {
        "detect"
    }
    fn about(&self) -> &'static str {
        "preamble detection / miss / false-alarm rates vs SNR"
    }
    fn run(&self, cfg: &SweepConfig) -> Result<RunOutput> {
        detect::run(cfg)
    }
}

impl Experiment for SyncMseExperiment {
    fn name(&self) -> &'static str {
        "sync_mse"
    }
    fn about(&self) -> &'static str {
        "timing/CFO estimation MSE vs SNR with the CRLB column"
    }
    fn run(&self, cfg: &SweepConfig) -> Result<RunOutput> {
        sync_mse::run(cfg)
    }
}

impl Experiment for PerExperiment {
    fn name(&self) -> &'static str {
        "per"
    }
    fn about(&self) -> &'static str {
        "end-to-end packet error rate vs SNR"
    }
    fn run(&self, cfg: &SweepConfig) -> Result<RunOutput> {
        per::run(cfg)
    }
}

impl Experiment for LoopbackExperiment {
    fn name(&self) -> &'static str {
        "loopback"
    }
    fn about(&self) -> &'static str {
        "single deterministic frame with stage-by-stage trace"
    }
    fn run(&self, cfg: &SweepConfig) -> Result<RunOutput> {
        loopback::run(cfg)
    }
}

impl Experiment for TheoryExperiment {
    fn name(&self) -> &'static str {
        "theory"
    }
    fn about(&self) -> &'static str {
        "closed-form (x, y) curve tables"
    }
    fn run(&self, cfg: &SweepConfig) -> Result<RunOutput> {
        theory_curves::run(cfg)
    }
}

impl Experiment for SeqcheckExperiment {
    fn name(&self) -> &'static str {
        "seqcheck"
    }
    fn about(&self) -> &'static str {
        "orthogonality report for spreading sequences"
    }
    fn run(&self, cfg: &SweepConfig) -> Result<RunOutput> {
        seqcheck::run(cfg)
    }
}

/// All registered experiments.
pub fn experiment_registry() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(DetectExperiment),
        Box::new(SyncMseExperiment),
        Box::new(PerExperiment),
        Box::new(LoopbackExperiment),
        Box::new(TheoryExperiment),
        Box::new(SeqcheckExperiment),
    ]
}

pub fn experiment_names() -> Vec<&'static str> {
    experiment_registry().iter().map(|e| e.name()).collect()
}

pub fn experiment_by_name(name: &str) -> Option<Box<dyn Experiment>> {
    experiment_registry().into_iter().find(|e| e.name() == name)
}

/// Dispatches on the config's experiment kind.
pub fn run_experiment(cfg: &SweepConfig) -> Result<RunOutput> {
    let exp = experiment_by_name(cfg.experiment.name())
        .ok_or_else(|| anyhow!("no experiment '{}'", cfg.experiment.name()))?;
    exp.run(cfg)
}

/// Runs `n` independent trials in parallel, each with a private random
/// stream keyed by (seed, point, trial). Results come back in trial
/// order, so reductions are deterministic regardless of thread count.
pub fn run_trials<T, F>(seed: u64, point_idx: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, ChaCha8Rng) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|t| {
            let stream = RandomStream::new(seed, ((point_idx as u64) << 32) | t as u64);
            f(t, stream.rng())
        })
        .collect()
}

/// Per-trial channel draw, in the order (CFO, delay, gain).
pub struct TrialDraw {
    pub df_b: f64,
    pub df_fs: f64,
    pub sto_chips: f64,
    pub tau_fine: usize,
    pub gain: num_complex::Complex64,
}

pub fn draw_trial(cfg: &SweepConfig, rng: &mut impl Rng) -> TrialDraw {
    let df_b = if cfg.cfo_hi_b > cfg.cfo_lo_b {
        rng.random_range(cfg.cfo_lo_b..cfg.cfo_hi_b)
    } else {
        cfg.cfo_lo_b
    };
    let (lo, hi) = cfg.sto_case.bounds_chips(cfg.params.n);
    let sto_chips = rng.random_range(lo..hi);
    let tau_fine = (sto_chips * (cfg.params.k * cfg.params.r) as f64).round() as usize;
    let gain = match cfg.channel {
        modem_core::channel::ChannelKind::Awgn => num_complex::Complex64::new(1.0, 0.0),
        modem_core::channel::ChannelKind::RayleighFlat => modem_core::channel::rayleigh_gain(rng),
    };
    TrialDraw { df_b, df_fs: df_b / cfg.params.k as f64, sto_chips, tau_fine, gain }
}

/// Resolves the spreading sequence: explicit file, else the built-in for
/// the configured SF_p. Warns (does not fail) on a non-orthogonal load.
pub fn resolve_sequence(cfg: &SweepConfig) -> Result<SpreadingSequence> {
    let d = match &cfg.spread_file {
        Some(path) => SpreadingSequence::from_file(path).map_err(|e| anyhow!("{e}"))?,
        None => SpreadingSequence::default_for(cfg.params.sf_p).ok_or_else(|| {
            anyhow!(
                "no built-in spreading sequence for SF_p = {}; provide spread_file",
                cfg.params.sf_p
            )
        })?,
    };
    if !d.is_orthogonal() {
        eprintln!(
            "warning: spreading sequence {d} violates the orthogonality criterion \
             (alternating sum != 0); expect degraded error rates"
        );
    }
    Ok(d)
}
