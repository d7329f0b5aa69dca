//! Sweep configuration: defaults, flat key=value config files, and CLI
//! overrides. CLI flags win over file values, which win over defaults.

use anyhow::{anyhow, bail, Context, Result};
use modem_core::channel::ChannelKind;
use modem_core::params::PhyParams;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Detect,
    SyncMse,
    Per,
    Loopback,
    Theory,
    Seqcheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Detect => "detect",
            ExperimentKind::SyncMse => "sync_mse",
            ExperimentKind::Per => "per",
            ExperimentKind::Loopback => "loopback",
            ExperimentKind::Theory => "theory",
            ExperimentKind::Seqcheck => "seqcheck",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "detect" => Some(ExperimentKind::Detect),
            "sync_mse" => Some(ExperimentKind::SyncMse),
            "per" => Some(ExperimentKind::Per),
            "loopback" => Some(ExperimentKind::Loopback),
            "theory" => Some(ExperimentKind::Theory),
            "seqcheck" => Some(ExperimentKind::Seqcheck),
            _ => None,
        }
    }
}

/// Start-of-packet delay prior, in chip units of the chirp length N:
/// case 1 keeps the preamble inside the first sliding window, case 2
/// lets it start anywhere up to 1.5 N chips in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoCase {
    Case1,
    Case2,
}

impl StoCase {
    /// Uniform delay bounds in chips.
    pub fn bounds_chips(self, n: u32) -> (f64, f64) {
        match self {
            StoCase::Case1 => (0.25 * n as f64, 0.75 * n as f64),
            StoCase::Case2 => (0.25 * n as f64, 1.5 * n as f64),
        }
    }
}

/// Everything one experiment run needs. See the module docs for the SNR
/// convention.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub experiment: ExperimentKind,
    pub snr_points: Vec<f64>,
    pub n_trials: usize,
    pub channel: ChannelKind,
    pub sto_case: StoCase,
    /// CFO prior bounds, normalized to the bandwidth B. Equal bounds pin
    /// the CFO to a fixed value.
    pub cfo_lo_b: f64,
    pub cfo_hi_b: f64,
    pub ideal_sync: bool,
    pub seed: u64,
    pub params: PhyParams,
    pub gamma: f64,
    pub eta: f64,
    pub corr_backend: String,
    pub spread_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Theory experiment: which curve, over which x grid.
    pub curve: String,
    pub x_from: f64,
    pub x_to: f64,
    pub x_step: f64,
    /// Extra knob for curves needing a fixed CFO (sampling-rate units).
    pub df_fs: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            experiment: ExperimentKind::Loopback,
            snr_points: vec![10.0],
            n_trials: 1000,
            channel: ChannelKind::Awgn,
            sto_case: StoCase::Case2,
            cfo_lo_b: -0.2,
            cfo_hi_b: 0.2,
            ideal_sync: false,
            seed: 1,
            params: PhyParams::default(),
            gamma: 4.0,
            eta: 1.5,
            corr_backend: "direct".to_string(),
            spread_file: None,
            out: None,
            curve: "autocorr".to_string(),
            x_from: 0.0,
            x_to: 0.0,
            x_step: 1.0,
            df_fs: 0.05,
        }
    }
}

impl SweepConfig {
    /// Per-sample SNR at the sync rate for a quoted per-symbol SNR.
    pub fn snr_sample_db(&self, snr_symbol_db: f64) -> f64 {
        snr_symbol_db - 10.0 * (self.params.k as f64).log10()
    }

    /// Applies `key=value` pairs from a config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), lineno + 1))?;
            self.apply_kv(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    /// Applies one key=value setting.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                self.experiment = ExperimentKind::from_name(value)
                    .ok_or_else(|| anyhow!("unknown experiment '{value}'"))?;
            }
            "snr" => self.snr_points = parse_snr_list(value)?,
            "trials" => self.n_trials = value.parse().context("trials")?,
            "seed" => self.seed = value.parse().context("seed")?,
            "channel" => {
                self.channel = match value {
                    "awgn" => ChannelKind::Awgn,
                    "rayleigh" => ChannelKind::RayleighFlat,
                    other => bail!("unknown channel '{other}'"),
                };
            }
            "sto_case" => {
                self.sto_case = match value {
                    "1" | "case1" => StoCase::Case1,
                    "2" | "case2" => StoCase::Case2,
                    other => bail!("unknown sto_case '{other}'"),
                };
            }
            "cfo_lo" => self.cfo_lo_b = value.parse().context("cfo_lo")?,
            "cfo_hi" => self.cfo_hi_b = value.parse().context("cfo_hi")?,
            "ideal_sync" => self.ideal_sync = parse_bool(value)?,
            "sf" => {
                self.params.sf = value.parse().context("sf")?;
                self.params.n = 1 << self.params.sf;
            }
            "n" => {
                self.params.n = value.parse().context("n")?;
                self.params.sf = self.params.n.trailing_zeros();
            }
            "k" => self.params.k = value.parse().context("k")?,
            "r" => self.params.r = value.parse().context("r")?,
            "b_hz" => self.params.b_hz = value.parse().context("b_hz")?,
            "sfp" => self.params.sf_p = value.parse().context("sfp")?,
            "payload_len" => self.params.payload_len = value.parse().context("payload_len")?,
            "gamma" => self.gamma = value.parse().context("gamma")?,
            "eta" => self.eta = value.parse().context("eta")?,
            "target_pfa" => {
                let pfa: f64 = value.parse().context("target_pfa")?;
                let w = (self.params.n * self.params.k) as u32;
                self.gamma = modem_core::theory::gamma_for_pfa(pfa, w)
                    .map_err(|e| anyhow!("target_pfa: {e}"))?;
            }
            "corr" => self.corr_backend = value.to_string(),
            "spread_file" => self.spread_file = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "curve" => self.curve = value.to_string(),
            "x_from" => self.x_from = value.parse().context("x_from")?,
            "x_to" => self.x_to = value.parse().context("x_to")?,
            "x_step" => self.x_step = value.parse().context("x_step")?,
            "df" => self.df_fs = value.parse().context("df")?,
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    /// Validates cross-field constraints and the PHY parameters.
    pub fn validate(&self) -> Result<()> {
        self.params
            .clone()
            .validate()
            .map_err(|e| anyhow!("params: {e}"))?;
        if self.snr_points.is_empty() {
            bail!("at least one SNR point required");
        }
        if self.n_trials < 1 {
            bail!("trials must be >= 1");
        }
        if self.cfo_lo_b > self.cfo_hi_b {
            bail!("cfo_lo > cfo_hi");
        }
        if self.cfo_lo_b < -0.25 || self.cfo_hi_b > 0.25 {
            bail!("CFO bounds outside the +/-0.25 B estimator range");
        }
        modem_core::sync::correlator_by_name(&self.corr_backend)
            .map_err(|e| anyhow!("{e}"))?;
        Ok(())
    }

    /// Canonical text form, used both for the config hash and for
    /// reproducing a run.
    pub fn canonical(&self) -> String {
        let mut m = BTreeMap::new();
        m.insert("experiment", self.experiment.name().to_string());
        m.insert(
            "snr",
            self.snr_points
                .iter()
                .map(|s| format!("{s}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("trials", self.n_trials.to_string());
        m.insert(
            "channel",
            match self.channel {
                ChannelKind::Awgn => "awgn".to_string(),
                ChannelKind::RayleighFlat => "rayleigh".to_string(),
            },
        );
        m.insert(
            "sto_case",
            match self.sto_case {
                StoCase::Case1 => "1",
                StoCase::Case2 => "2",
            }
            .to_string(),
        );
        m.insert("cfo_lo", format!("{}", self.cfo_lo_b));
        m.insert("cfo_hi", format!("{}", self.cfo_hi_b));
        m.insert("ideal_sync", self.ideal_sync.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("n", self.params.n.to_string());
        m.insert("k", self.params.k.to_string());
        m.insert("r", self.params.r.to_string());
        m.insert("sfp", self.params.sf_p.to_string());
        m.insert("payload_len", self.params.payload_len.to_string());
        m.insert("gamma", format!("{}", self.gamma));
        m.insert("eta", format!("{}", self.eta));
        m.insert("corr", self.corr_backend.clone());
        if let Some(f) = &self.spread_file {
            m.insert("spread_file", f.display().to_string());
        }
        if self.experiment == ExperimentKind::Theory {
            m.insert("curve", self.curve.clone());
            m.insert("x_from", format!("{}", self.x_from));
            m.insert("x_to", format!("{}", self.x_to));
            m.insert("x_step", format!("{}", self.x_step));
            m.insert("df", format!("{}", self.df_fs));
        }
        let mut out = String::new();
        for (k, v) in m {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => bail!("expected boolean, got '{other}'"),
    }
}

/// Accepts `a:b:step` ranges (inclusive) or comma lists.
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("SNR range must be start:end:step");
        }
        let (a, b, step): (f64, f64, f64) =
            (parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
        if step <= 0.0 || b < a {
            bail!("SNR range needs end >= start and step > 0");
        }
        let count = ((b - a) / step).round() as usize + 1;
        Ok((0..count).map(|i| a + i as f64 * step).collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("SNR '{t}': {e}")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_parsing() {
        assert_eq!(parse_snr_list("-5,-3,0").unwrap(), vec![-5.0, -3.0, 0.0]);
        assert_eq!(parse_snr_list("-6:-4:1").unwrap(), vec![-6.0, -5.0, -4.0]);
        assert!(parse_snr_list("3:1:1").is_err());
    }

    #[test]
    fn kv_overrides() {
        let mut cfg = SweepConfig::default();
        cfg.apply_kv("experiment", "detect").unwrap();
        cfg.apply_kv("trials", "500").unwrap();
        cfg.apply_kv("sfp", "16").unwrap();
        cfg.apply_kv("channel", "rayleigh").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Detect);
        assert_eq!(cfg.n_trials, 500);
        assert_eq!(cfg.params.sf_p, 16);
        assert_eq!(cfg.channel, ChannelKind::RayleighFlat);
        assert!(cfg.apply_kv("bogus", "1").is_err());
        cfg.validate().unwrap();
    }

    #[test]
    fn snr_sample_conversion() {
        let cfg = SweepConfig::default(); // K = 2
        let d = cfg.snr_sample_db(-5.0) - (-5.0 - 10.0 * 2f64.log10());
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn canonical_is_stable() {
        let cfg = SweepConfig::default();
        assert_eq!(cfg.canonical(), cfg.canonical());
        let mut cfg2 = cfg.clone();
        cfg2.apply_kv("seed", "9").unwrap();
        assert_ne!(cfg.canonical(), cfg2.canonical());
    }

    #[test]
    fn target_pfa_sets_gamma() {
        let mut cfg = SweepConfig::default();
        cfg.apply_kv("target_pfa", "1e-5").unwrap();
        assert!((cfg.gamma - 3.79).abs() < 0.01);
    }
}
