//! Monte-Carlo experiment harness for the chirp-preamble DSSS-MSK modem:
//! seeded trial execution, sweep orchestration, aggregation, and CSV
//! emission. Each experiment lives behind a common trait and is selected
//! by name from the command line or a config file.
//!
//! SNR convention: sweep points are quoted as per-symbol SNR in dB (the
//! usual link-budget axis, with the signal power referenced to the chip
//! rate B). The per-sample SNR at the sync rate `K*B` is lower by
//! `10*log10(K)` because oversampling widens the noise bandwidth;
//! [`SweepConfig::snr_sample_db`] applies that conversion everywhere a
//! channel realization is built.

pub mod config;
pub mod csv;
pub mod experiments;
pub mod link;

pub use config::{ExperimentKind, StoCase, SweepConfig};
pub use experiments::{experiment_by_name, experiment_names, Experiment, RunOutput};
